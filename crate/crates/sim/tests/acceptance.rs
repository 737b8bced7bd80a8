//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use bdirs_core::{
    make_channels, numerical_gradient, path_loss, project_to_xi, sample_geometry, xi_set, QuantSpec64, RunRecord64,
    ScaledCodeword64, Variant, C64,
};
use bdirs_sim::{execute, run_convergence_experiment, run_sweep_experiment, Experiment, ExperimentConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn desk_config(n: usize, m: usize, seeds: std::ops::Range<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.n_bs = n;
    cfg.scenario.m_irs = m;
    cfg.seeds = seeds.collect();
    cfg
}

fn by_variant(records: &[RunRecord64]) -> BTreeMap<Variant, BTreeMap<u64, &RunRecord64>> {
    let mut out: BTreeMap<Variant, BTreeMap<u64, &RunRecord64>> = BTreeMap::new();
    for r in records {
        out.entry(r.variant).or_default().insert(r.seed, r);
    }
    out
}

fn convergence_records() -> Vec<RunRecord64> {
    let mut cfg = desk_config(16, 16, 0..100);
    cfg.converge.p_dbm = 10.0;
    run_convergence_experiment(&cfg)
        .expect("convergence experiment")
        .records
}

fn monotone_convergence(records: &[RunRecord64]) -> Outcome {
    let monotone = records.iter().filter(|r| r.is_monotone()).count();
    let mut detail = format!("{monotone}/{} traces non-decreasing", records.len());
    let mut pass = monotone == records.len();
    for (v, runs) in by_variant(records) {
        let conv = runs.values().filter(|r| r.converged && r.iters_used <= 50).count();
        detail += &format!("; {v}: {conv}/{} converged (need >= 95%)", runs.len());
        pass &= conv * 100 >= 95 * runs.len();
    }
    Outcome { pass, detail }
}

fn bd_dominates(records: &[RunRecord64]) -> Outcome {
    let groups = by_variant(records);
    let (bd, diag) = (&groups[&Variant::Bd], &groups[&Variant::Diag]);
    let wins = bd.iter().filter(|(s, r)| r.final_se() >= diag[s].final_se()).count();
    let mean = |g: &BTreeMap<u64, &RunRecord64>| g.values().map(|r| r.final_se()).sum::<f64>() / g.len() as f64;
    let (mb, md) = (mean(bd), mean(diag));
    Outcome {
        pass: wins == bd.len() && mb > md,
        detail: format!(
            "bd >= diag in {wins}/{} seeds; mean bd {mb:.4} vs diag {md:.4}",
            bd.len()
        ),
    }
}

fn power_trend() -> Outcome {
    let mut cfg = desk_config(16, 16, 0..50);
    cfg.sweep.n_values = vec![16];
    cfg.sweep.p_dbm_values = vec![10.0, 20.0, 30.0];
    let res = run_sweep_experiment(&cfg).expect("power sweep");
    let mut pass = true;
    let mut detail = String::new();
    for v in Variant::ALL {
        let m: Vec<f64> = [10.0, 20.0, 30.0]
            .iter()
            .map(|&p| res.mean_se(16, p, v).unwrap())
            .collect();
        let inc = m[1] > m[0] && m[2] > m[1];
        pass &= inc;
        detail += &format!(
            "{v}: {:.3} < {:.3} < {:.3} ({inc}), 20->30 step {:.3}; ",
            m[0],
            m[1],
            m[2],
            m[2] - m[1]
        );
        if v == Variant::Bd {
            let step = m[2] - m[1];
            let ok = (2.5..=3.7).contains(&step);
            pass &= ok;
            detail += &format!("bd step in [2.5, 3.7]: {ok}; ");
        }
    }
    Outcome {
        pass,
        detail: detail.trim_end_matches("; ").into(),
    }
}

fn antenna_trend() -> Outcome {
    let mut cfg = desk_config(16, 16, 0..50);
    cfg.sweep.n_values = vec![8, 16, 32];
    cfg.sweep.p_dbm_values = vec![10.0];
    let res = run_sweep_experiment(&cfg).expect("antenna sweep");
    let mut pass = true;
    let mut detail = String::new();
    for v in Variant::ALL {
        let m: Vec<f64> = [8, 16, 32].iter().map(|&n| res.mean_se(n, 10.0, v).unwrap()).collect();
        let ok = m.windows(2).all(|w| w[1] >= w[0]);
        pass &= ok;
        detail += &format!("{v}: N=8 {:.4}, N=16 {:.4}, N=32 {:.4} ({ok}); ", m[0], m[1], m[2]);
    }
    Outcome {
        pass,
        detail: detail.trim_end_matches("; ").into(),
    }
}

fn all_words(alphabet: &[C64], n: usize) -> Vec<Vec<C64>> {
    (0..alphabet.len().pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let a = alphabet[k % alphabet.len()];
                    k /= alphabet.len();
                    a
                })
                .collect()
        })
        .collect()
}

fn joint_optimum(cfg: &ExperimentConfig, seed: u64, n: usize, m: usize) -> (f64, f64) {
    let mut scenario = cfg.scenario.clone();
    scenario.n_bs = n;
    scenario.m_irs = m;
    let link = bdirs_sim::build_link(&scenario, seed).unwrap();
    let joint = cfg.joint(cfg.converge.p_dbm).unwrap();
    let rec = bdirs_core::run_joint(&link, &joint, Variant::Bd, seed).unwrap();
    let spec = QuantSpec64::new(1).unwrap();
    let phis: Vec<Array2<C64>> = all_words(spec.zeta(), m * m)
        .into_iter()
        .map(|w| Array2::from_shape_vec((m, m), w).unwrap())
        .collect();
    let mut best = 0.0f64;
    for w in all_words(&xi_set::<f64>(), n) {
        let v = ScaledCodeword64::new(Array1::from(w), joint.p_tot_w).unwrap();
        for phi in &phis {
            best = best.max(link.spectral_efficiency(&v, phi).unwrap());
        }
    }
    (rec.final_se(), best)
}

fn joint_brute_force() -> Outcome {
    let cfg = desk_config(1, 1, 0..100);
    let exact = (0..100)
        .filter(|&s| {
            let (got, best) = joint_optimum(&cfg, s, 1, 1);
            (got - best).abs() <= 1e-12 * best.max(1e-300)
        })
        .count();
    let near = (0..100)
        .filter(|&s| {
            let (got, best) = joint_optimum(&cfg, s, 2, 2);
            got <= best * (1.0 + 1e-12) && got >= 0.9 * best
        })
        .count();
    Outcome {
        pass: exact == 100 && near >= 90,
        detail: format!("N=M=1 exact in {exact}/100; N=M=2 within 0.9 of optimum in {near}/100 (need >= 90)"),
    }
}

fn nearest(alphabet: &[C64], z: C64) -> C64 {
    let mut best = alphabet[0];
    for &a in alphabet {
        if (z - a).norm() < (z - best).norm() {
            best = a;
        }
    }
    best
}

fn quantizer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draw = |scale: f64| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
    let xi = xi_set::<f64>();
    let inputs: Vec<C64> = (0..10_000).map(|_| draw(3.0)).collect();
    let proj = project_to_xi(&inputs);
    let mut mismatches = inputs
        .iter()
        .zip(proj.iter())
        .filter(|(z, p)| nearest(&xi, **z) != **p)
        .count();
    let mut idem = project_to_xi(proj.as_slice().unwrap()) == proj;
    let mut detail = String::from("xi");
    for l in 1..=4 {
        let spec = QuantSpec64::new(l).unwrap();
        for _ in 0..10_000 {
            let z = draw(2.0);
            let p = spec.project(z);
            mismatches += usize::from(p != nearest(spec.zeta(), z));
            idem &= spec.project(p) == p;
        }
        detail += &format!(", zeta(L={l})");
    }
    Outcome {
        pass: mismatches == 0 && idem,
        detail: format!("10^4 inputs each for {detail}: {mismatches} mismatches, idempotent: {idem}"),
    }
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 6;
        let raw: Vec<C64> = (0..n * n).map(|_| c()).collect();
        let a = Array2::from_shape_fn((n, n), |(i, j)| (raw[i * n + j] + raw[j * n + i].conj()) * 0.5);
        let b: Vec<C64> = (0..n).map(|_| c()).collect();
        let v: Vec<C64> = (0..n).map(|_| c()).collect();
        let f = |x: &[C64]| {
            let mut q = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    q += x[i].conj() * a[[i, j]] * x[j];
                }
            }
            q.re + 2.0 * (0..n).map(|i| (b[i].conj() * x[i]).re).sum::<f64>()
        };
        let g = numerical_gradient(&v, f, 1e-4).unwrap();
        for i in 0..n {
            let exact = ((0..n).map(|j| a[[i, j]] * v[j]).sum::<C64>() + b[i]) * 2.0;
            worst = worst.max((g[i] - exact).norm() / exact.norm().max(1e-3));
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("worst relative error {worst:.2e} over 100 Hermitian quadratics (need <= 1e-6)"),
    }
}

fn channel_invariants() -> Outcome {
    let cfg = desk_config(16, 12, 0..1);
    let (mut rank, mut modulus, mut fro) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100 {
        let p = sample_geometry::<f64>(seed, &cfg.scenario);
        let ch = make_channels(&p).unwrap();
        let rho1 = path_loss(p.carrier_freq_hz, p.d1_m, p.mu_abs_per_m, p.c_mps).unwrap();
        let rho2 = path_loss(p.carrier_freq_hz, p.d2_m, p.mu_abs_per_m, p.c_mps).unwrap();
        let h = &ch.h_bs_irs;
        let sv = nalgebra::DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[[i, j]]).singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|x, y| y.total_cmp(x));
        rank = rank.max(s[1] / s[0]);
        for z in h.iter() {
            modulus = modulus.max((z.norm() / rho1 - 1.0).abs());
        }
        for z in ch.g_irs_user.iter() {
            modulus = modulus.max((z.norm() / rho2 - 1.0).abs());
        }
        let f = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let want = rho1 * ((p.m_irs * p.n_bs) as f64).sqrt();
        fro = fro.max((f - want).abs() / want);
    }
    Outcome {
        pass: rank <= 1e-10 && modulus <= 1e-12 && fro <= 1e-10,
        detail: format!("100 draws: max s2/s1 {rank:.1e}, max steering modulus error {modulus:.1e}, max Frobenius rel. error {fro:.1e}"),
    }
}

fn reproducibility() -> Outcome {
    let mut cfg = desk_config(8, 8, 0..6);
    cfg.sweep.n_values = vec![4, 8];
    let mut same = true;
    let mut files = 0;
    for exp in [Experiment::Converge, Experiment::Sweep] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let pa = execute(exp, &cfg, a.path()).unwrap();
        let pb = execute(exp, &cfg, b.path()).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            same &= std::fs::read(x).unwrap() == std::fs::read(y).unwrap();
            files += 1;
        }
    }
    Outcome {
        pass: same,
        detail: format!("{files} output files compared across two invocations, identical: {same}"),
    }
}

fn main() {
    let started = Instant::now();
    let records = std::cell::OnceCell::new();
    let shared = || records.get_or_init(convergence_records).as_slice();
    let criteria: Vec<Criterion> = vec![
        (
            "monotone convergence (N=M=16, 10 dBm, 100 seeds)",
            Box::new(|| monotone_convergence(shared())),
        ),
        (
            "BD vs diagonal dominance (same runs)",
            Box::new(|| bd_dominates(shared())),
        ),
        ("power trend (N=16, 10/20/30 dBm, 50 seeds)", Box::new(power_trend)),
        ("antenna trend (N=8/16/32, 10 dBm, 50 seeds)", Box::new(antenna_trend)),
        (
            "joint brute-force oracle (N=M=1 and N=M=2, 100 seeds)",
            Box::new(joint_brute_force),
        ),
        ("quantizer oracle", Box::new(quantizer_oracle)),
        (
            "numerical gradient on quadratics (delta=1e-4)",
            Box::new(gradient_check),
        ),
        ("channel invariants", Box::new(channel_invariants)),
        ("reproducibility (byte-identical outputs)", Box::new(reproducibility)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{tag}] {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
