//! Acceptance run: one PASS/FAIL line per criterion, at the stated tolerances
//! and runtime budgets.
//!
//! Built with `harness = false` so the lines always reach the output. The
//! process fails if any criterion fails, except those listed in
//! `KNOWN_FAILURES`, which are printed as FAIL and explained in the README.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use quadrics::families::{
    make_clifford, make_counterexample, make_umbilical, BaseSurfaceSpec, CliffordSpec, Counterexample,
    CounterexampleSpec, UmbilicalSpec,
};
use quadrics::geodesic::{
    circle_params, closed_form_deviation, ell_sine_residual, flow_time_to_reach, half_range, integrate_vtop_flow,
    path_table, prediction_deviation, reparametrize_arclength, split_v_curvature, DEFAULT_DT,
};
use quadrics::mesh::convergence_study;
use quadrics::quadrature::tensor_rule;
use quadrics::report::{level_set_consistency, synthetic_tally};
use quadrics::rng::Lcg64;
use quadrics::spectral::{clifford_spectrum, dimension_bound_report, index_counts, index_test_constants};
use quadrics::support::{
    check_gradient_identities, check_laplacian_identities, cross_gram_norm, gram_dimension, proportionality_scan,
    SupportFamily,
};
use quadrics::{AmbientVector, ChartPoint, Hypersurface};

/// Criterion 7 asks for `V1 ⊥ V2` on a minimal Clifford hypersurface, where
/// `|A|^2 = n` makes `f_v = ±ell_v` and the two families coincide.
const KNOWN_FAILURES: &[usize] = &[7];

struct Outcome {
    clauses: Vec<(String, bool)>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            clauses: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn note(&mut self, text: String) {
        self.notes.push(text);
    }

    fn clause(&mut self, label: impl Into<String>, ok: bool) {
        self.clauses.push((label.into(), ok));
    }

    fn bound(&mut self, label: &str, value: f64, tol: f64) {
        self.clause(format!("{label} = {value:.3e} (< {tol:.0e})"), value < tol);
    }

    fn passed(&self) -> bool {
        self.clauses.iter().all(|(_, ok)| *ok)
    }
}

fn basis(m: usize, i: usize) -> AmbientVector {
    let mut v = AmbientVector::zeros(m);
    v[i] = 1.0;
    v
}

fn points(surface: &Hypersurface, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = Lcg64::new(seed);
    (0..count).map(|_| surface.domain().sample(&mut rng, 0.05)).collect()
}

fn counterexample() -> Counterexample {
    make_counterexample(&CounterexampleSpec {
        base: BaseSurfaceSpec::standard(2, 0.02, 2),
    })
    .unwrap()
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = Lcg64::new(101);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.int_range(2, 5) as usize;
        let k = rng.int_range(1, n as i64 - 1) as usize;
        let spec = CliffordSpec::new(n, k, rng.uniform(0.1, 0.95));
        let m = make_clifford(&spec).unwrap();
        let (a, b) = spec.principal_curvatures();
        let (r, s) = (spec.r, spec.co_radius());
        // closed forms written out independently of the spec helpers
        let (ka, kb) = (-s / r, r / s);
        let h = (k as f64 * ka + (n - k) as f64 * kb) / n as f64;
        let norm = k as f64 * ka * ka + (n - k) as f64 * kb * kb;
        worst = worst.max((a - ka).abs()).max((b - kb).abs());
        for p in points(&m, 5, rng.next_u64()) {
            let c = m.shape_operator(&p).unwrap();
            let mut expect = [vec![ka; k], vec![kb; n - k]].concat();
            expect.sort_by(f64::total_cmp);
            for (x, y) in c.kappas.iter().zip(&expect) {
                worst = worst.max((x - y).abs());
            }
            worst = worst.max((c.mean_h - h).abs()).max((c.norm_a_sq - norm).abs());
        }

        let n = rng.int_range(2, 5) as usize;
        let spec = UmbilicalSpec::new(rng.unit_vector(n + 2), rng.uniform(-0.9, 0.9));
        let m = make_umbilical(&spec).unwrap();
        let kappa = spec.c / (1.0 - spec.c * spec.c).sqrt();
        for p in points(&m, 5, rng.next_u64()) {
            let c = m.shape_operator(&p).unwrap();
            for x in &c.kappas {
                worst = worst.max((x - kappa).abs());
            }
            worst = worst
                .max((c.mean_h - kappa).abs())
                .max((c.norm_a_sq - n as f64 * kappa * kappa).abs());
        }
    }
    out.bound("max curvature deviation over 20 Clifford + 20 umbilical specs", worst, 1e-9);
    out
}

fn identity_residuals(surface: &Hypersurface, count: usize, seed: u64, with_f: bool) -> (f64, f64, f64) {
    let m = surface.ambient_dim();
    let mut rng = Lcg64::new(seed);
    let generic = AmbientVector::from_vec(rng.unit_vector(m));
    let (mut grad, mut lap_ell, mut lap_f) = (0.0f64, 0.0f64, 0.0f64);
    for (i, p) in points(surface, count, seed).iter().enumerate() {
        for v in [basis(m, i % m), generic.clone()] {
            let g = check_gradient_identities(surface, p, &v).unwrap();
            grad = grad.max(g.ell).max(g.f);
            let l = check_laplacian_identities(surface, p, &v).unwrap();
            lap_ell = lap_ell.max(l.ell);
            if with_f {
                lap_f = lap_f.max(l.f.expect("CMC surface"));
            } else {
                assert!(l.f.is_none(), "counter-example must fail the CMC gate");
            }
        }
    }
    (grad, lap_ell, lap_f)
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let surfaces = [
        ("M_1(0.6)", make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap()),
        ("M_1(0.5) in S^4", make_clifford(&CliffordSpec::new(3, 1, 0.5)).unwrap()),
        ("S^2(e1, 0.5)", make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.5)).unwrap()),
        ("great S^3", make_umbilical(&UmbilicalSpec::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], 0.0)).unwrap()),
    ];
    for (i, (name, m)) in surfaces.iter().enumerate() {
        let (g, le, lf) = identity_residuals(m, 1000, 200 + i as u64, true);
        out.bound(&format!("{name} gradient"), g, 1e-8);
        out.bound(&format!("{name} Laplacian"), le.max(lf), 1e-4);
    }
    let ce = counterexample();
    let (g, le, _) = identity_residuals(&ce.surface, 1000, 250, false);
    out.bound("counter-example gradient", g, 1e-8);
    out.bound("counter-example ell Laplacian", le, 1e-4);
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    for (n, k, r) in [(2, 1, 0.6), (2, 1, 0.3), (3, 1, 0.5), (3, 2, 0.8), (4, 2, 0.45)] {
        let spec = CliffordSpec::new(n, k, r);
        let m = make_clifford(&spec).unwrap();
        let pts = points(&m, 300, 300 + n as u64);
        let s = (1.0 - r * r).sqrt();
        for (label, v, lambda) in [("first", basis(n + 2, 0), r / s), ("second", basis(n + 2, k + 1), -s / r)] {
            let scan = proportionality_scan(&m, &v, &pts).unwrap();
            out.note(format!("M_{k}({r}) in S^{} {label} factor: lambda = {:.12} (expected {:.12})", n + 1, scan.lambda, lambda));
            out.bound(
                &format!("M_{k}({r}) {label}-factor residual"),
                scan.max_residual.max((scan.lambda - lambda).abs()),
                1e-7,
            );
        }
    }
    let ce = counterexample();
    let scan = proportionality_scan(&ce.surface, &ce.axis(), &points(&ce.surface, 500, 310)).unwrap();
    out.note(format!("counter-example: lambda = {:.12} (expected 1)", scan.lambda));
    out.bound("counter-example residual", scan.max_residual.max((scan.lambda - 1.0).abs()), 1e-7);
    out
}

fn geodesic_run(
    surface: &Hypersurface,
    anchor: &ChartPoint,
    v: &AmbientVector,
    lambda: f64,
) -> (f64, f64, f64) {
    let params = circle_params(surface, anchor, v, lambda).unwrap();
    let t = flow_time_to_reach(lambda, half_range(lambda) - 0.02);
    let path = integrate_vtop_flow(surface, anchor, v, (-t, t), DEFAULT_DT).unwrap();
    let arc = reparametrize_arclength(&path).unwrap();
    let dev = closed_form_deviation(&arc, &params, 0.05).unwrap();
    let rest = split_v_curvature(&surface.shape_operator(anchor).unwrap().kappas, lambda).1;
    let rows = path_table(surface, &arc, v, lambda, Some(&rest), 10).unwrap();
    (dev.point.max(dev.normal), ell_sine_residual(&arc, &params), prediction_deviation(&rows))
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let torus = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
    let (mut closed, mut sine): (f64, f64) = (0.0, 0.0);
    for phi in [0.0, 1.3, -2.4] {
        let (c, s, _) = geodesic_run(&torus, &ChartPoint::new(vec![FRAC_PI_2, phi]), &basis(4, 0), 0.75);
        closed = closed.max(c);
        sine = sine.max(s);
    }
    out.bound("M_1(0.6) closed-form deviation", closed, 1e-4);
    out.bound("M_1(0.6) ell sine law", sine, 1e-6);

    let ce = counterexample();
    let (mut closed, mut sine, mut pred): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in [-2.5, -0.4, 0.9, 2.1] {
        let anchor = ce.chart_point(0.0, &ChartPoint::new(vec![t]));
        let (c, s, p) = geodesic_run(&ce.surface, &anchor, &ce.axis(), 1.0);
        closed = closed.max(c);
        sine = sine.max(s);
        pred = pred.max(p);
    }
    out.bound("counter-example closed-form deviation", closed, 1e-4);
    out.bound("counter-example ell sine law", sine, 1e-6);
    out.bound("counter-example curvature prediction", pred, 1e-4);
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let (consistent, total) = level_set_consistency(200, 500).unwrap();
    out.clause(
        format!("{consistent}/{total} Clifford/umbilical level-set points CONSISTENT"),
        consistent == total,
    );
    let tally = synthetic_tally(2000, 501);
    out.clause(
        format!(
            "{} synthetic I3-nonempty instances: {} OnlyZeroSolution, {} IdentityHolds, {} errors",
            tally.instances, tally.only_zero, tally.false_holds, tally.errors
        ),
        tally.instances >= 1000 && tally.only_zero == tally.instances && tally.false_holds == 0,
    );
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    for (r, expect) in [(0.2, 10), (0.3, 8), (0.5, 4), (0.6, 4), (0.707, 4), (0.8, 4), (0.866, 4)] {
        let idx = index_counts(&CliffordSpec::new(2, 1, r), None).unwrap();
        let kernel: Vec<_> = idx.kernel_lines.iter().map(|l| l.label).collect();
        out.clause(
            format!("r = {r}: weak index {} (expected {expect}), kernel {kernel:?}", idx.weak_index),
            idx.weak_index == expect,
        );
    }
    let tie = |r: f64, lines: &[(usize, usize)]| {
        let idx = index_counts(&CliffordSpec::new(2, 1, r), None).unwrap();
        let mut got: Vec<_> = idx.kernel_lines.iter().map(|l| l.label).collect();
        got.sort();
        got == lines
    };
    out.clause("kernel at r = 0.2 is {(0,5), (1,1)}", tie(0.2, &[(0, 5), (1, 1)]));
    out.clause("kernel at r = 0.5 is {(0,2), (1,1)}", tie(0.5, &[(0, 2), (1, 1)]));
    let strong = index_counts(&CliffordSpec::minimal(2, 1), None).unwrap().strong_index;
    out.clause(format!("strong index at r = sqrt(1/2) is {strong}"), strong == 5);
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let spec = CliffordSpec::new(2, 1, 0.6);
    let c = index_test_constants(spec.mean_curvature(), spec.norm_a_sq(), 2).unwrap();
    let expected = [
        ("alpha_+", c.alpha_plus, -4.0 / 3.0),
        ("alpha_-", c.alpha_minus, 0.75),
        ("mu_+", c.mu_plus, 2.777_777_777_777_778),
        ("mu_-", c.mu_minus, 1.5625),
        ("jac_+", c.jac_plus, -1.5625),
        ("jac_-", c.jac_minus, -2.777_777_777_777_778),
    ];
    for (name, got, want) in expected {
        out.bound(&format!("{name} = {got:.10} vs {want:.10}, gap"), (got - want).abs(), 1e-9);
    }
    let lines = clifford_spectrum(&spec, 4).unwrap();
    out.bound("|mu_+ - line (1,0)|", (c.mu_plus - lines.line(1, 0).unwrap().eigenvalue).abs(), 1e-9);
    out.bound("|mu_- - line (0,1)|", (c.mu_minus - lines.line(0, 1).unwrap().eigenvalue).abs(), 1e-9);

    let minimal = make_clifford(&CliffordSpec::minimal(2, 1)).unwrap();
    let rule = tensor_rule(&minimal, 16).unwrap();
    let d1 = gram_dimension(&minimal, SupportFamily::V1, &rule).unwrap();
    let d2 = gram_dimension(&minimal, SupportFamily::V2, &rule).unwrap();
    out.clause(format!("minimal Clifford dim V1 = {d1}, dim V2 = {d2} (n+2 = 4)"), d1 == 4 && d2 == 4);
    out.bound("minimal Clifford V1 x V2 cross Gram", cross_gram_norm(&minimal, &rule).unwrap(), 1e-6);
    let b = dimension_bound_report(&minimal, &rule).unwrap();
    out.note(format!("minimal Clifford: dim(V1 + V2) = {} (f_v = +-ell_v since |A|^2 = n)", b.union_rank));
    let torus = make_clifford(&spec).unwrap();
    let b = dimension_bound_report(&torus, &tensor_rule(&torus, 16).unwrap()).unwrap();
    out.note(format!(
        "M_1(0.6): rank U+ = {}, rank U- = {}, dim(U+ + U-) = {}, cross Gram {:.3e}",
        b.rank_first, b.rank_second, b.union_rank, b.cross_gram
    ));

    let great = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.0)).unwrap();
    let rule = tensor_rule(&great, 16).unwrap();
    let d1 = gram_dimension(&great, SupportFamily::V1, &rule).unwrap();
    let d2 = gram_dimension(&great, SupportFamily::V2, &rule).unwrap();
    out.clause(format!("great sphere dim V1 = {d1}, dim V2 = {d2} (n+1 = 3, 1)"), d1 == 3 && d2 == 1);
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    for r in [FRAC_1_SQRT_2, 0.6] {
        let spec = CliffordSpec::new(2, 1, r);
        for grid in [32, 64] {
            let study = convergence_study(&spec, grid).unwrap();
            out.clause(
                format!(
                    "r = {r:.4}, grid {grid} -> {}: {} lines, ratios in [{:.4}, {:.4}], fitted C {:.4}",
                    2 * grid,
                    study.coarse.rows.len(),
                    study.min_ratio,
                    study.max_ratio,
                    study.coarse.fitted_c
                ),
                study.coarse.rows.len() == 12 && study.second_order(3.5, 4.5),
            );
        }
    }
    out
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "canonical curvature closed forms", criterion_1, Some(Duration::from_secs(5))),
        (2, "support-function identities", criterion_2, Some(Duration::from_secs(30))),
        (3, "proportionality table", criterion_3, None),
        (4, "geodesic-circle suite", criterion_4, Some(Duration::from_secs(60))),
        (5, "level-set obstruction", criterion_5, None),
        (6, "index plateau", criterion_6, Some(Duration::from_secs(5))),
        (7, "index test constants and support-family dimensions", criterion_7, None),
        (8, "mesh cross-check", criterion_8, None),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            outcome.clause(format!("runtime {:.2} s (< {} s)", elapsed.as_secs_f64(), limit.as_secs()), elapsed < limit);
        }
        let status = if outcome.passed() { "PASS" } else { "FAIL" };
        println!("{status} criterion {id}: {name} ({:.2} s)", elapsed.as_secs_f64());
        for (label, ok) in &outcome.clauses {
            println!("    [{}] {label}", if *ok { "ok" } else { "FAIL" });
        }
        for note in &outcome.notes {
            println!("    {note}");
        }
        if !outcome.passed() && !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures (known: {KNOWN_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
