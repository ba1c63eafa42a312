//! Scratch probe: measures the quantities needed to pin the landscape
//! test tolerances (energy decomposition remainders, cluster ascent
//! behavior, mass-report splits, lift accounting). Not part of the crate.

use std::time::Instant;

use layercrest::ansatz::{
    build_ansatz, solve_closure, ClosureParams, ConcentrationPoint,
};
use layercrest::domain::{
    build_domain, generate_mesh, BoundaryCurve, Domain2D, LiftSpec, MeshParams, Weight,
};
use layercrest::greens::GreenSolver;
use layercrest::landscape::{
    energy, quantize_and_lift, reduced_f0, search_boundary_cluster, search_boundary_separated,
    search_interior, sweep_boundary, SearchOptions,
};
use layercrest::numerics::Point2;
use layercrest::reduction::{newton_solve_full, scale_tuned_seed};

const PI: f64 = std::f64::consts::PI;

fn unit_disk(weight: Weight) -> Domain2D {
    build_domain(BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(), weight).unwrap()
}

fn newton_field(
    domain: &Domain2D,
    mesh: &layercrest::domain::Mesh,
    points: &[ConcentrationPoint],
    eps: f64,
) -> (layercrest::ansatz::Ansatz, Vec<f64>) {
    let params = ClosureParams::default();
    let ansatz = build_ansatz(domain, mesh, points, eps, &params).unwrap();
    let seed = scale_tuned_seed(domain, mesh, &ansatz).unwrap();
    let sol = newton_solve_full(domain, mesh, &seed.u, &[eps], 25).unwrap();
    let step = &sol.steps[0];
    println!(
        "    newton: {} iters, residual {:.2e}, mass {:.4}",
        step.iterations, step.residual, step.mass
    );
    (ansatz, sol.u)
}

fn spike_mesh(
    domain: &Domain2D,
    points: &[ConcentrationPoint],
    eps: f64,
    base_h: f64,
) -> layercrest::domain::Mesh {
    let params = ClosureParams::default();
    let probe_mesh = generate_mesh(domain, &MeshParams::with_h(0.2)).unwrap();
    let probe = GreenSolver::new(domain, &probe_mesh);
    let closure = solve_closure(&probe, points, eps, &params).unwrap();
    let mut mp = MeshParams::with_h(base_h);
    for (pt, d) in points.iter().zip(&closure.scales) {
        println!("    closure d = {d:.4}, eps*d = {:.4}", eps * d);
        mp = mp.graded(pt.point, 0.8 * eps * d / 8.0);
    }
    generate_mesh(domain, &mp).unwrap()
}

fn main() {
    let t0 = Instant::now();
    let params = ClosureParams::default();

    // ---------- 1. interior bubble energy decomposition, a ≡ 1 ----------
    println!("== interior bubble, a=1, eps=0.01 ==");
    let disk = unit_disk(Weight::constant(1.0).unwrap());
    let eps = 0.01;
    let center = ConcentrationPoint::interior(Point2::ZERO);
    let mesh = spike_mesh(&disk, &[center], eps, 0.1);
    println!("    mesh nodes: {}", mesh.num_nodes());
    let (ansatz, u) = newton_field(&disk, &mesh, &[center], eps);
    let rep = energy(&disk, &mesh, &u, eps, Some(&ansatz)).unwrap();
    let solver = GreenSolver::new(&disk, &mesh);
    let f0 = reduced_f0(&solver, &[center], eps, &params).unwrap();
    println!(
        "    J={:.6} leading={:.6} interaction={:.6} remainder={:.6}",
        rep.value, rep.leading, rep.interaction, rep.remainder
    );
    println!(
        "    f0(resolve)={:.10} vs leading+interaction={:.10} rel={:.2e}",
        f0,
        rep.leading + rep.interaction,
        ((f0 - rep.leading - rep.interaction) / f0).abs()
    );
    println!(
        "    |remainder| / (16π L) = {:.4e}",
        rep.remainder.abs() / (16.0 * PI * eps.ln().abs())
    );

    // ---------- 2. boundary pair energy remainder, a ≡ 1 ----------
    println!("== boundary pair, a=1, eps=0.01 ==");
    let pair = [
        ConcentrationPoint::boundary(&disk, Point2::new(1.0, 0.0)),
        ConcentrationPoint::boundary(&disk, Point2::new(-1.0, 0.0)),
    ];
    let mesh2 = spike_mesh(&disk, &pair, eps, 0.1);
    println!("    mesh nodes: {}", mesh2.num_nodes());
    let (ansatz2, u2) = newton_field(&disk, &mesh2, &pair, eps);
    let rep2 = energy(&disk, &mesh2, &u2, eps, Some(&ansatz2)).unwrap();
    println!(
        "    J={:.6} leading={:.6} interaction={:.6} remainder={:.6}",
        rep2.value, rep2.leading, rep2.interaction, rep2.remainder
    );
    println!(
        "    |remainder| / |interaction| = {:.4}",
        rep2.remainder.abs() / rep2.interaction.abs()
    );
    // counterfactual: doubled boundary Robin coefficient
    let h_sum: f64 = ansatz2
        .h_diag()
        .iter()
        .zip(ansatz2.points())
        .map(|(h, p)| {
            let c = p.tag.coefficient();
            c * c * h
        })
        .sum();
    let extra = -4.0 * PI * h_sum; // doubling the H term adds this again
    println!(
        "    counterfactual doubled-H interaction={:.6} remainder={:.6} ratio={:.4}",
        rep2.interaction + extra,
        rep2.remainder - extra,
        (rep2.remainder - extra).abs() / (rep2.interaction + extra).abs()
    );

    // ---------- 3. merging pair f0 direction ----------
    println!("== merging pair f0, a=1, eps=0.01, sep_coeff=0.5 ==");
    let loose = ClosureParams { sep_coeff: 0.5, ..ClosureParams::default() };
    let mesh_c = generate_mesh(&disk, &MeshParams::with_h(0.045)).unwrap();
    let solver_c = GreenSolver::new(&disk, &mesh_c);
    for delta in [0.4, 0.2, 0.1] {
        let pts = [
            ConcentrationPoint::boundary(&disk, Point2::new(delta.cos(), delta.sin())),
            ConcentrationPoint::boundary(&disk, Point2::new(delta.cos(), -delta.sin())),
        ];
        let f0 = reduced_f0(&solver_c, &pts, eps, &loose).unwrap();
        println!("    half-gap {delta:.2}: f0 = {f0:.6}");
    }

    // ---------- 4. separated search on the trig weight ----------
    println!("== separated search, a=2+cos3θ ==");
    let trig = unit_disk(Weight::from_expr("2 + x1^3 - 3*x1*x2^2").unwrap());
    let mesh_t = generate_mesh(&trig, &MeshParams::with_h(0.045)).unwrap();
    let solver_t = GreenSolver::new(&trig, &mesh_t);
    let opts = SearchOptions::default();
    let anchors: Vec<Point2> = (0..6)
        .map(|k| {
            let th = k as f64 * PI / 3.0 + 0.1;
            Point2::new(th.cos(), th.sin())
        })
        .collect();
    let sep = search_boundary_separated(&solver_t, &anchors, eps, &opts).unwrap();
    for (k, (s, c)) in sep.arc_params.iter().zip(&sep.certificates).enumerate() {
        let target = k as f64 * PI / 3.0;
        println!(
            "    anchor {k}: s*={s:.8} dev={:+.2e} faces=({:+.3e},{:+.3e}) falling={}",
            s - target,
            c.lower_face,
            c.upper_face,
            c.is_falling()
        );
    }
    println!("    f0={:.6} grad_norm={:.3e}", sep.f0, sep.grad_norm);

    // ---------- 5. interior search, a = 2 - x2 ----------
    println!("== interior search, a=2-x2, eps=0.01 ==");
    let slope = unit_disk(Weight::from_expr("2 - x2").unwrap());
    let mesh_s = generate_mesh(&slope, &MeshParams::with_h(0.045)).unwrap();
    let solver_s = GreenSolver::new(&slope, &mesh_s);
    let res = search_interior(&solver_s, Point2::new(0.15, -0.95), eps, &opts).unwrap();
    let zeta = res.points[0].point;
    println!(
        "    s*={:.8} (3π/2={:.8}) t*={:.10} zeta=({:.6},{:.6})",
        res.arc_params[0],
        1.5 * PI,
        res.t_values[0],
        zeta.x,
        zeta.y
    );
    println!(
        "    |t*-3|={:.2e} f0={:.6} grad_norm={:.3e} certs certified={},{} falling={},{}",
        (res.t_values[0] - 3.0).abs(),
        res.f0,
        res.grad_norm,
        res.certificates[0].certified(),
        res.certificates[1].certified(),
        res.certificates[0].is_falling(),
        res.certificates[1].is_falling(),
    );

    // rejection paths
    let rise = unit_disk(Weight::from_expr("2 + x2").unwrap());
    let mesh_r = generate_mesh(&rise, &MeshParams::with_h(0.08)).unwrap();
    let solver_r = GreenSolver::new(&rise, &mesh_r);
    let err = search_interior(&solver_r, Point2::new(0.0, -1.0), eps, &opts).unwrap_err();
    println!("    inward-growing rejection: {err}");
    let flat_mesh = generate_mesh(&disk, &MeshParams::with_h(0.08)).unwrap();
    let flat_solver = GreenSolver::new(&disk, &flat_mesh);
    let err2 = search_interior(&flat_solver, Point2::new(1.0, 0.0), eps, &opts).unwrap_err();
    println!("    flat-weight rejection: {err2}");

    // ---------- 6. cluster search over the eps sweep ----------
    println!("== cluster search, a=2+cos3θ, m=2 ==");
    for eps_c in [0.05, 0.02, 0.01] {
        let tc = Instant::now();
        match search_boundary_cluster(&solver_t, Point2::new(1.0, 0.0), 2, eps_c, &opts) {
            Ok(r) => {
                let floor = 1.0 / eps_c.ln().abs();
                println!(
                    "    eps={eps_c}: arcs=({:+.5},{:+.5}) sep={:.4} floor={:.4} f0={:.4} \
                     grad={:.3e} [{:.1}s]",
                    r.arc_params[0],
                    r.arc_params[1],
                    r.separations[0],
                    floor,
                    r.f0,
                    r.grad_norm,
                    tc.elapsed().as_secs_f64()
                );
                println!(
                    "    certs: ({:+.3e},{:+.3e}) ({:+.3e},{:+.3e})",
                    r.certificates[0].lower_face,
                    r.certificates[0].upper_face,
                    r.certificates[1].lower_face,
                    r.certificates[1].upper_face
                );
            }
            Err(e) => println!("    eps={eps_c}: ERROR {e}"),
        }
    }
    // m=1 equivalence
    let one = search_boundary_cluster(&solver_t, Point2::new(1.0, 0.0), 1, eps, &opts).unwrap();
    let one_sep =
        search_boundary_separated(&solver_t, &[Point2::new(1.0, 0.0)], eps, &opts).unwrap();
    println!(
        "    m=1 cluster f0={:.10} vs separated f0={:.10} diff={:.2e}",
        one.f0,
        one_sep.f0,
        (one.f0 - one_sep.f0).abs()
    );

    // ---------- 7. mass report on the anisotropic pair ----------
    println!("== mass split, a=2-x2, pair (0,±1), eps=0.01 ==");
    let pts_m = [
        ConcentrationPoint::boundary(&slope, Point2::new(0.0, 1.0)),
        ConcentrationPoint::boundary(&slope, Point2::new(0.0, -1.0)),
    ];
    let mesh_m = spike_mesh(&slope, &pts_m, eps, 0.1);
    println!("    mesh nodes: {}", mesh_m.num_nodes());
    let (_ansatz_m, u_m) = newton_field(&slope, &mesh_m, &pts_m, eps);
    let mr = quantize_and_lift(&slope, &mesh_m, &u_m, eps, &pts_m, None).unwrap();
    println!(
        "    total_plain={:.4} (8π={:.4}) total_weighted={:.4}",
        mr.total_plain,
        8.0 * PI,
        mr.total_weighted
    );
    println!(
        "    per_plain=({:.4},{:.4}) expected=({:.4},{:.4})",
        mr.per_point_plain[0], mr.per_point_plain[1], mr.expected_plain[0], mr.expected_plain[1]
    );
    println!(
        "    per_weighted=({:.4},{:.4}) targets=({:.4},{:.4})",
        mr.per_point_weighted[0],
        mr.per_point_weighted[1],
        4.0 * PI,
        12.0 * PI
    );

    // ---------- 8. lift accounting on the offset disk ----------
    println!("== lift, a=x1 on disk at (2.5,0), eps=0.01 ==");
    let lifted_domain = build_domain(
        BoundaryCurve::disk(Point2::new(2.5, 0.0), 1.0).unwrap(),
        Weight::power(2, 1).unwrap(),
    )
    .unwrap();
    let mesh_l0 = generate_mesh(&lifted_domain, &MeshParams::with_h(0.08)).unwrap();
    let solver_l = GreenSolver::new(&lifted_domain, &mesh_l0);
    let found =
        search_boundary_separated(&solver_l, &[Point2::new(3.6, 0.05)], eps, &opts).unwrap();
    println!(
        "    located arc={:.6} point=({:.6},{:.6})",
        found.arc_params[0], found.points[0].point.x, found.points[0].point.y
    );
    let pt_l = found.points[0];
    let mesh_l = spike_mesh(&lifted_domain, &[pt_l], eps, 0.1);
    println!("    mesh nodes: {}", mesh_l.num_nodes());
    let (_al, u_l) = newton_field(&lifted_domain, &mesh_l, &[pt_l], eps);
    let spec = LiftSpec::new(2, 1).unwrap();
    let ml = quantize_and_lift(&lifted_domain, &mesh_l, &u_l, eps, &[pt_l], Some(&spec)).unwrap();
    let target = 4.0 * PI * 2.0 * PI * 3.5;
    println!(
        "    lifted_total={:.4} lifted_expected={:.4} target(4π·2π·3.5)={:.4} rel={:.4}",
        ml.lifted_total.unwrap(),
        ml.lifted_expected.unwrap(),
        target,
        (ml.lifted_total.unwrap() - target).abs() / target
    );

    // ---------- 9. boundary sweep smoke ----------
    println!("== boundary sweep, a=2+cos3θ ==");
    let ts = Instant::now();
    let s_grid: Vec<f64> = (0..64).map(|k| k as f64 * 2.0 * PI / 64.0).collect();
    let samples = sweep_boundary(&solver_t, &s_grid, eps, &params).unwrap();
    let best = samples
        .iter()
        .max_by(|a, b| a.f0.partial_cmp(&b.f0).unwrap())
        .unwrap();
    println!(
        "    {} samples in {:.2}s, argmax s={:.4} (expect near 0, 2π/3, 4π/3)",
        samples.len(),
        ts.elapsed().as_secs_f64(),
        best.s
    );

    println!("total probe time {:.1}s", t0.elapsed().as_secs_f64());
}
