//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p qerc-core --test acceptance -- --nocapture`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qerc_core::classifier::{loss_and_grad, Example, LinearModel, CLASSES};
use qerc_core::dataset::{
    balance_classes, build_grid, downsample_training, generate_dataset, load_dataset, Dataset, DownsampleSpec, GridSpec,
    Split, ThinningVariant,
};
use qerc_core::experiment::{ablate, shift_components, sweep_qubits, Method, RunConfig};
use qerc_core::featurizer::ComponentSelection;
use qerc_core::labeler::{spinodal_chi_n, BoundaryTable, PhaseLabel};
use qerc_core::phase_viz::{diff_diagram, render_png, render_svg, Palette, PhaseDiagramGrid};
use qerc_core::reservoir::{
    apply, encode, measure_probs, sample_clifford, t_layer, Gate, GateSequence, Reservoir, ReservoirSpec, StateVector,
    Variant,
};
use qerc_core::scft::{run_scft, MaterialParams, SimConfig};

struct Report {
    results: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// Independent of the library: closed-form Debye functions, brute-force scan.
fn oracle_spinodal(f: f64) -> f64 {
    let g = |h: f64, x: f64| 2.0 * (h * x + (-h * x).exp() - 1.0) / (x * x);
    let big_f = |x: f64| {
        let g1 = g(1.0, x);
        let ga = g(f, x);
        let gb = g(1.0 - f, x);
        g1 / (ga * gb - 0.25 * (g1 - ga - gb).powi(2))
    };
    let mut best = f64::INFINITY;
    let mut x = 0.5;
    while x <= 20.0 {
        best = best.min(big_f(x));
        x += 1e-4;
    }
    best / 2.0
}

fn spinodal(report: &mut Report) {
    let start = Instant::now();
    let got = spinodal_chi_n(0.5).expect("spinodal").chi_n;
    let elapsed = start.elapsed();
    let oracle = oracle_spinodal(0.5);
    let pass = (got - 10.495).abs() <= 0.01 && (got - oracle).abs() <= 0.01 && elapsed < Duration::from_secs(1);
    report.record(
        "spinodal oracle",
        pass,
        format!("chiN_s(0.5) = {got:.5}, oracle {oracle:.5}, target 10.495 +- 0.01, {:.3} s", secs(elapsed)),
    );
}

fn homogeneity(report: &mut Report) {
    // at chi = 0 the density error tracks about f * tolerance
    let sim = SimConfig {
        tolerance: 1e-6,
        ..SimConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for f in [0.3, 0.4, 0.5] {
        let params = MaterialParams::new(f, 0.0).unwrap();
        let start = Instant::now();
        let m = run_scft(&params, &sim, 7).expect("scft");
        let elapsed = start.elapsed();
        let dev = m.phi_a.as_slice().iter().map(|p| (p - f).abs()).fold(0.0, f64::max);
        pass &= m.converged && dev <= 1e-6 && elapsed < Duration::from_secs(10);
        parts.push(format!(
            "f={f}: converged={} max|phi-f|={dev:.1e} in {:.2} s",
            m.converged,
            secs(elapsed)
        ));
    }
    report.record("scft homogeneity (64x64, chi=0)", pass, parts.join("; "));
}

fn segregation(report: &mut Report) {
    let sim = SimConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (chi_n, above) in [(25.0, true), (2.5, false)] {
        let params = MaterialParams::new(0.5, chi_n / MaterialParams::DEFAULT_SEGMENTS as f64).unwrap();
        let start = Instant::now();
        let m = run_scft(&params, &sim, 11).expect("scft");
        let elapsed = start.elapsed();
        let dev = m.phi_a.as_slice().iter().map(|p| (p - 0.5).abs()).fold(0.0, f64::max);
        let ok = if above { dev > 0.2 } else { dev <= 0.05 };
        pass &= ok && elapsed < Duration::from_secs(300);
        parts.push(format!(
            "chiN={chi_n}: max|phi-0.5|={dev:.3} ({} iterations, converged={}) in {:.1} s",
            m.iterations_used,
            m.converged,
            secs(elapsed)
        ));
    }
    report.record("scft segregation direction (f=0.5)", pass, parts.join("; "));
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    let q = rng.random_range(0..n);
    match rng.random_range(0..if n > 1 { 5 } else { 4 }) {
        0 => Gate::H(q),
        1 => Gate::S(q),
        2 => Gate::Sdg(q),
        3 => Gate::T(q),
        _ => {
            let mut t = rng.random_range(0..n - 1);
            if t >= q {
                t += 1;
            }
            Gate::Cnot { control: q, target: t }
        }
    }
}

/// Unitary columns with the global phase fixed by the first non-negligible entry.
fn canonical_unitary(seq: &GateSequence) -> String {
    let cols: Vec<Complex64> = (0..2)
        .flat_map(|i| apply(seq, &StateVector::basis(1, i)).unwrap().amplitudes().to_vec())
        .collect();
    let pivot = cols.iter().find(|a| a.norm() > 1e-6).copied().unwrap();
    let phase = pivot.conj() / pivot.norm();
    cols.iter()
        .map(|a| {
            let z = a * phase;
            let r = |v: f64| {
                let v = (v * 1e6).round() / 1e6;
                if v == 0.0 { 0.0 } else { v }
            };
            format!("{:+.6}{:+.6}", r(z.re), r(z.im))
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn quantum_suite(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut worst_norm: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let features: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.0..PI)).collect();
        let gates = (0..60).map(|_| random_gate(&mut rng, n)).collect();
        let seq = GateSequence::new(n, gates).unwrap();
        let out = apply(&seq, &encode(&features, n).unwrap()).unwrap();
        worst_norm = worst_norm.max((out.norm() - 1.0).abs());
    }

    let t_state = apply(&t_layer(1), &StateVector::basis(1, 0)).unwrap();
    let p0 = measure_probs(&t_state).probs[0];
    let p0_err = (p0 - (2.0 + 2f64.sqrt()) / 4.0).abs();

    let mut flat_failures = 0;
    for i in 0..100u64 {
        let n = 1 + (i as usize % 8);
        let probs = measure_probs(&apply(&sample_clifford(n, 500 + i).unwrap(), &StateVector::basis(n, 0)).unwrap());
        let support: Vec<f64> = probs.probs.iter().copied().filter(|&p| p > 1e-12).collect();
        let k = support.len();
        let flat = k.is_power_of_two() && support.iter().all(|p| (p - 1.0 / k as f64).abs() < 1e-10);
        if !flat {
            flat_failures += 1;
        }
    }

    let draws = 10_000;
    let mut counts: HashMap<String, usize> = HashMap::new();
    for seed in 0..draws as u64 {
        *counts.entry(canonical_unitary(&sample_clifford(1, seed).unwrap())).or_default() += 1;
    }
    let p = 1.0 / 24.0;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    let worst_z = counts.values().map(|&c| (c as f64 - mean).abs() / sigma).fold(0.0, f64::max);

    let elapsed = start.elapsed();
    let pass = worst_norm <= 1e-10
        && p0_err <= 1e-12
        && flat_failures == 0
        && counts.len() == 24
        && worst_z <= 5.0
        && elapsed < Duration::from_secs(60);
    report.record(
        "quantum unit suite",
        pass,
        format!(
            "max |norm-1| {worst_norm:.1e}; T-only p(0) error {p0_err:.1e}; {flat_failures}/100 non-flat Clifford outputs; \
             {} distinct single-qubit Cliffords, worst deviation {worst_z:.2} sigma; {:.2} s",
            counts.len(),
            secs(elapsed)
        ),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] }
}

fn shot_convergence(report: &mut Report) {
    let start = Instant::now();
    let shots = [64u32, 512, 2048, 16384];
    let mut tv: Vec<Vec<f64>> = vec![Vec::new(); shots.len()];
    for seed in 0..100u64 {
        let res = Reservoir::new(ReservoirSpec::new(8, Variant::CliffordT, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        let features: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..PI)).collect();
        let exact = res.probabilities(&features).unwrap();
        for (i, &s) in shots.iter().enumerate() {
            tv[i].push(res.sampled(&features, s, seed).unwrap().total_variation(&exact));
        }
    }
    let medians: Vec<f64> = tv.into_iter().map(median).collect();
    let elapsed = start.elapsed();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    report.record(
        "shot convergence (8 qubits)",
        decreasing && elapsed < Duration::from_secs(60),
        format!("median TV {medians:.4?} over shots {shots:?}; {:.2} s", secs(elapsed)),
    );
}

fn gradient_check(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let dim = rng.random_range(2..16);
        let mut model = LinearModel::zeros(dim);
        model.weights.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let batch: Vec<Example> = (0..rng.random_range(1..10))
            .map(|_| Example {
                input: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                label: PhaseLabel::from_code(rng.random_range(0..CLASSES)).unwrap(),
            })
            .collect();
        let refs: Vec<&Example> = batch.iter().collect();
        let (_, grad) = loss_and_grad(&model, &refs).unwrap();
        let analytic: Vec<f64> = grad.weights.iter().chain(&grad.bias).copied().collect();

        let h = 1e-6;
        let loss_at = |m: &LinearModel| loss_and_grad(m, &refs).unwrap().0;
        let mut numeric = Vec::with_capacity(analytic.len());
        for i in 0..analytic.len() {
            let bump = |delta: f64| {
                let mut m = model.clone();
                if i < m.weights.len() {
                    m.weights[i] += delta;
                } else {
                    m.bias[i - m.weights.len()] += delta;
                }
                loss_at(&m)
            };
            numeric.push((bump(h) - bump(-h)) / (2.0 * h));
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
        worst = worst.max(diff / scale.max(1e-300));
    }
    let elapsed = start.elapsed();
    report.record(
        "classifier gradient check",
        worst <= 1e-5 && elapsed < Duration::from_secs(10),
        format!("worst relative error {worst:.2e} over 20 draws; {:.3} s", secs(elapsed)),
    );
}

fn desk_dataset(cfg: &RunConfig) -> Dataset {
    let plan = cfg.plan().unwrap();
    let (manifest, report) = generate_dataset(cfg.dataset_dir(), &plan, cfg.chunk, |_| {}).unwrap();
    println!(
        "  desk dataset: {} samples generated, {} failed, {} below tolerance at the iteration cap",
        report.generated,
        report.failed,
        manifest.samples.iter().filter(|s| s.converged == Some(false)).count()
    );
    load_dataset(cfg.dataset_dir()).unwrap()
}

fn desk_criteria(report: &mut Report) {
    let work = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::desk();
    cfg.paths.workdir = work.path().to_path_buf();
    let start = Instant::now();
    let ds = desk_dataset(&cfg);
    println!("  desk dataset ready after {:.0} s", secs(start.elapsed()));

    let sweep = sweep_qubits(&cfg, &ds, None).unwrap();
    let elapsed = start.elapsed();
    let o = &sweep.outcome;
    let ct = Method::Qerc {
        variant: Variant::CliffordT,
    };
    let hi = cfg.qubit_range[1];
    let q8 = o.mean(ct, Some(hi)).unwrap();
    let q4 = o.mean(ct, Some(4)).unwrap();
    let pca = o.mean(Method::PcaBaseline, Some(hi)).unwrap();
    let curve: Vec<String> = (cfg.qubit_range[0]..=hi)
        .map(|n| format!("{n}q {:.3}", o.mean(ct, Some(n)).unwrap()))
        .collect();
    println!("  sweep: {}; pixel baseline {:.3}", curve.join(", "), o.mean(Method::PixelBaseline, None).unwrap());
    report.record(
        "desk end-to-end",
        q8 >= pca + 0.05 && q8 > q4 && elapsed <= Duration::from_secs(30 * 60),
        format!(
            "{hi}-qubit QERC {q8:.3} vs PCA baseline {pca:.3} (need +0.050) and vs 4-qubit {q4:.3}; {:.0} s total",
            secs(elapsed)
        ),
    );

    let abl = ablate(&cfg, &ds, None).unwrap();
    let mean = |v| abl.mean(Method::Qerc { variant: v }, Some(cfg.n_qubits)).unwrap();
    let (m_ct, m_co, m_t) = (mean(Variant::CliffordT), mean(Variant::CliffordOnly), mean(Variant::TOnly));
    report.record(
        "desk ablation",
        m_ct >= m_co && m_ct >= m_t,
        format!("clifford-t {m_ct:.3}, clifford-only {m_co:.3}, t-only {m_t:.3}"),
    );

    let top_dropped = ComponentSelection::new((2..=2 * cfg.n_qubits + 1).collect()).unwrap();
    let shift = shift_components(&cfg, &ds, &top_dropped, None).unwrap();
    let negative = shift.deltas.iter().filter(|d| **d < 0.0).count();
    report.record(
        "desk component shift",
        shift.delta < 0.0 && 2 * negative > shift.deltas.len(),
        format!(
            "identity {:.3} -> components 2..={} {:.3} (delta {:+.3}, per repetition {:+.3?})",
            shift.identity.mean,
            2 * cfg.n_qubits + 1,
            shift.shifted.mean,
            shift.delta,
            shift.deltas
        ),
    );

    let analog: Vec<usize> = (1..=12).chain(17..=20).collect();
    let alt = shift_components(&cfg, &ds, &ComponentSelection::new(analog).unwrap(), None).unwrap();
    println!(
        "  info: components 1-12,17-20 gives {:.3} (delta {:+.3}, per repetition {:+.3?})",
        alt.shifted.mean, alt.delta, alt.deltas
    );
}

fn dataset_accounting(report: &mut Report) {
    let cfg = RunConfig::full();
    let points = build_grid(&cfg.grid).unwrap().len();
    let plan = cfg.plan().unwrap();
    let (train, test) = (plan.count(Split::Train), plan.count(Split::Test));
    let thinned = downsample_training(&plan, &DownsampleSpec::variant(ThinningVariant::A)).unwrap();
    let thinned_points = thinned.point_count(Split::Train);
    let balanced = balance_classes(&thinned, cfg.balance_seed).unwrap();
    let counts = balanced.class_counts(Split::Train);
    let equal = counts.iter().all(|&c| c == counts[0]);
    let total = balanced.count(Split::Train);
    report.record(
        "dataset accounting",
        points == 170 && train == 4080 && test == 1700 && thinned_points == 45 && equal && total == 344,
        format!(
            "{points} points, {train}/{test} samples; variant A keeps {thinned_points} training points \
             (class points {:?}); balanced to {total} samples {counts:?} (expected 344)",
            thinned.class_counts(Split::Train).map(|c| c / cfg.seeds.train)
        ),
    );
}

fn visualization(report: &mut Report) {
    let start = Instant::now();
    let spec = GridSpec::default();
    let table = BoundaryTable::shipped();
    let truth = PhaseDiagramGrid::from_truth(&spec, &table).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    render_png(&truth, &Palette::default(), 4, &a).unwrap();
    render_png(&truth, &Palette::default(), 4, &b).unwrap();
    let png_stable = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    let svg_stable = render_svg(&truth, &Palette::default(), "truth") == render_svg(&truth, &Palette::default(), "truth");
    let opaque = image::open(&a).unwrap().to_rgba8().pixels().all(|p| p.0[3] == 255);
    let cells = truth.cells().filter(|(_, _, c)| c.is_some_and(|c| c.ratio == 1.0)).count();
    let mismatches = diff_diagram(&truth, &truth).unwrap().mismatches.len();
    let elapsed = start.elapsed();
    report.record(
        "visualization determinism",
        png_stable && svg_stable && opaque && cells == 170 && mismatches == 0 && elapsed < Duration::from_secs(5),
        format!(
            "png stable {png_stable}, svg stable {svg_stable}, all opaque {opaque}, {cells}/170 unanimous cells, \
             {mismatches} self-diff mismatches; {:.2} s",
            secs(elapsed)
        ),
    );
}

#[test]
fn primary_criteria() {
    let mut report = Report { results: Vec::new() };
    spinodal(&mut report);
    homogeneity(&mut report);
    segregation(&mut report);
    quantum_suite(&mut report);
    shot_convergence(&mut report);
    gradient_check(&mut report);
    desk_criteria(&mut report);
    dataset_accounting(&mut report);
    visualization(&mut report);

    let failed: Vec<&str> = report.results.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    println!("{}/{} criteria passed", report.results.len() - failed.len(), report.results.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
