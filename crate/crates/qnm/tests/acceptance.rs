//! Release checklist for the emulator. Each test checks one acceptance item
//! and writes a single PASS/FAIL verdict straight to fd 2, bypassing libtest
//! capture, so the full checklist is visible in plain `cargo test` output.
//! A FAIL verdict is always followed by a panic carrying the same detail.

use std::collections::HashSet;
use std::io::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qnm::jacobian::{assemble, fd_step, DifferenceScheme};
use qnm::linsolve::lu_solve;
use qnm::problem::residual_vector;
use qnm::resource::{alpha_from_c, c_delta_x, success_prob};
use qnm::{
    newton_solve_with, qnm_solve_with, sample_linf, shots_for, BeamProblem, ChannelMode,
    DiffusionProblem, LeafKind, LeafUpdate, NonlinearProblem, NormTree, SolveOptions,
    TomographyConfig,
};

fn verdict(idx: usize, what: &str, ok: bool, detail: String) {
    let word = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr().lock(),
        "acceptance {idx:02} [{word}] {what}: {detail}"
    );
    assert!(ok, "acceptance {idx:02} ({what}): {detail}");
}

fn diffusion(n: usize) -> DiffusionProblem {
    DiffusionProblem::new(n, n, true).unwrap()
}

fn beam(n: usize) -> BeamProblem {
    BeamProblem::new(n, n).unwrap()
}

fn both(n: usize) -> Vec<(&'static str, Box<dyn NonlinearProblem>)> {
    vec![
        ("diffusion", Box::new(diffusion(n))),
        ("beam", Box::new(beam(n))),
    ]
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[test]
fn a01_identity_channel_reproduces_the_exact_iteration() {
    let start = Instant::now();
    let opts = SolveOptions::new(1e-8, 50).unwrap();
    let mut worst = 0.0f64;
    for (name, p) in &both(16) {
        let x0 = p.initial_guess();
        let exact = newton_solve_with(p.as_ref(), &x0, &opts).unwrap();
        let cfg = TomographyConfig::new(0.005)
            .unwrap()
            .with_channel(ChannelMode::Identity)
            .with_seed(11);
        let mut rng = cfg.make_rng();
        let routed = qnm_solve_with(p.as_ref(), &x0, &opts, &cfg, &mut rng).unwrap();
        assert_eq!(
            exact.records.len(),
            routed.records.len(),
            "{name}: run lengths differ"
        );
        assert_eq!(
            exact.converged, routed.converged,
            "{name}: convergence flags differ"
        );
        for (a, b) in exact.records.iter().zip(&routed.records) {
            let rel =
                (a.residual_norm - b.residual_norm).abs() / a.residual_norm.max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "identity channel reproduces the exact iteration at 16x16",
        worst <= 1e-9 && secs < 5.0,
        format!("max per-iteration residual gap {worst:.1e}, {secs:.2}s"),
    );
}

/// Runs 20 seeded sampled solves and counts how many reach a tenth of the
/// readout accuracy. The sampled iteration plateaus near `eps_s`; asking for
/// `0.1 * eps_s` separates genuine convergence from a stall at the plateau.
fn converged_count(p: &dyn NonlinearProblem, eps_s: f64, seed_base: u64) -> usize {
    let opts = SolveOptions::new(0.1 * eps_s, 200).unwrap();
    let x0 = p.initial_guess();
    let mut hits = 0;
    for rep in 0..20u64 {
        let cfg = TomographyConfig::new(eps_s)
            .unwrap()
            .with_seed(seed_base + rep);
        let mut rng = cfg.make_rng();
        let trace = qnm_solve_with(p, &x0, &opts, &cfg, &mut rng).unwrap();
        if trace.converged {
            hits += 1;
        }
    }
    hits
}

#[test]
fn a02_low_noise_runs_converge_on_both_problems() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, p) in &both(200) {
        let hits = converged_count(p.as_ref(), 0.005, 0);
        ok &= hits >= 18;
        detail.push_str(&format!("{name} {hits}/20; "));
    }
    verdict(
        2,
        "eps_s = 0.005 runs at 200x200 reach a tenth of the readout accuracy",
        ok,
        detail.trim_end_matches("; ").into(),
    );
}

#[test]
fn a03_noise_thresholds_split_the_two_problems() {
    let arms: [(&str, f64, bool); 4] = [
        ("diffusion", 0.05, true),
        ("diffusion", 0.2, false),
        ("beam", 0.1, true),
        ("beam", 0.4, false),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for &(name, eps_s, expect_converge) in &arms {
        let p: Box<dyn NonlinearProblem> = match name {
            "diffusion" => Box::new(diffusion(200)),
            _ => Box::new(beam(200)),
        };
        let conv = converged_count(p.as_ref(), eps_s, 100);
        let agree = if expect_converge { conv } else { 20 - conv };
        ok &= agree >= 15;
        let wanted = if expect_converge { "converge" } else { "fail" };
        detail.push_str(&format!("{name}@{eps_s} {wanted} {agree}/20; "));
    }
    verdict(
        3,
        "noise thresholds separate convergence from failure",
        ok,
        detail.trim_end_matches("; ").into(),
    );
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        out[i] = rank as f64 + 1.0;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mean) * (b - mean);
        dx += (a - mean).powi(2);
        dy += (b - mean).powi(2);
    }
    num / (dx * dy).sqrt()
}

#[test]
fn a04_final_accuracy_degrades_with_readout_noise() {
    let p = diffusion(200);
    let x0 = p.initial_guess();
    let grid = [0.005f64, 0.01, 0.02, 0.05];
    let mut medians = Vec::new();
    let mut stray = 0usize;
    for (gi, &eps_s) in grid.iter().enumerate() {
        let opts = SolveOptions::new(0.1 * eps_s, 200).unwrap();
        let mut finals = Vec::new();
        for rep in 0..20u64 {
            let cfg = TomographyConfig::new(eps_s)
                .unwrap()
                .with_seed(((gi as u64) << 32) | rep);
            let mut rng = cfg.make_rng();
            let trace = qnm_solve_with(&p, &x0, &opts, &cfg, &mut rng).unwrap();
            if trace.converged && !(trace.final_residual < eps_s) {
                stray += 1;
            }
            finals.push(trace.final_residual);
        }
        finals.sort_by(f64::total_cmp);
        medians.push(0.5 * (finals[9] + finals[10]));
    }
    let rho = spearman(&grid, &medians);
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.1e}")).collect();
    verdict(
        4,
        "median final residual rises with eps_s on the diffusion sweep",
        rho > 0.0 && stray == 0,
        format!("spearman {rho:.2}, medians {shown:?}, {stray} converged runs missed eps_s"),
    );
}

fn random_unit(n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = l2(&v);
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

#[test]
fn a05_sampled_vectors_concentrate_entrywise() {
    let mut ok = true;
    let mut detail = String::new();
    for &n in &[256usize, 4096] {
        for &eps_s in &[0.1f64, 0.05] {
            let base = TomographyConfig::new(eps_s).unwrap();
            let shots = shots_for(n, &base).unwrap();
            let mut vgen = ChaCha12Rng::seed_from_u64(0x5eed ^ ((n as u64) << 8) ^ eps_s.to_bits());
            let mut hits = 0usize;
            let mut support_ok = true;
            for trial in 0..200u64 {
                let v = random_unit(n, &mut vgen);
                let cfg = base
                    .clone()
                    .with_seed(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n as u64);
                let mut rng = cfg.make_rng();
                let out = sample_linf(&v, &cfg, &mut rng).unwrap();
                let dev = v
                    .iter()
                    .zip(&out.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if dev <= eps_s {
                    hits += 1;
                }
                support_ok &= (out.support_size as u64) < shots;
            }
            ok &= hits >= 190 && support_ok;
            detail.push_str(&format!(
                "n={n} eps_s={eps_s}: {hits}/200 in band, support<shots {support_ok}; "
            ));
        }
    }
    verdict(
        5,
        "sampled unit vectors stay within eps_s of the input in max norm",
        ok,
        detail.trim_end_matches("; ").into(),
    );
}

#[test]
fn a06_recovered_step_length_equals_the_newton_step_length() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, p) in &both(16) {
        let mut x = p.initial_guess();
        let mut worst = 0.0f64;
        let mut steps = 0usize;
        // Replays the identity-channel run: solve the normalized system for
        // the direction, recover the physical step length from (alpha, C_b,
        // p, f_max), and compare against an independent unnormalized solve.
        for _ in 0..50 {
            let r = residual_vector(p.as_ref(), &x).unwrap();
            let tree = NormTree::build(&x, &r).unwrap();
            let sys = assemble(p.as_ref(), &tree, DifferenceScheme::Forward).unwrap();
            if sys.c_b <= 1e-8 {
                break;
            }
            let scaled_rhs: Vec<f64> = sys.b.iter().map(|v| -v / sys.c_b).collect();
            let y = lu_solve(&sys.a, &scaled_rhs).unwrap().delta_x;
            let newton_rhs: Vec<f64> = sys.b.iter().map(|v| -v / sys.f_max).collect();
            let dx = lu_solve(&sys.a, &newton_rhs).unwrap().delta_x;
            let want = l2(&dx);
            let alpha = 7.25;
            let prob = success_prob(&sys, &y, alpha).unwrap();
            let got = c_delta_x(alpha, sys.c_b, prob, sys.f_max).unwrap();
            worst = worst.max((got - want).abs() / want);
            steps += 1;
            let ynorm = l2(&y);
            let scale = sys.c_b * ynorm / sys.f_max;
            for (xi, yi) in x.iter_mut().zip(&y) {
                if *yi != 0.0 {
                    *xi += scale * yi / ynorm;
                }
            }
        }
        ok &= worst <= 1e-10 && steps >= 5;
        detail.push_str(&format!("{name} {steps} steps worst {worst:.1e}; "));
    }
    verdict(
        6,
        "step length recovered from observables matches the Newton step",
        ok,
        detail.trim_end_matches("; ").into(),
    );
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[test]
fn a07_norm_tree_invariants_hold_under_random_updates() {
    let mut ok = true;
    let mut detail = String::new();
    for &n in &[4usize, 37, 1024] {
        let mut rng = ChaCha12Rng::seed_from_u64(42 + n as u64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut tree = NormTree::build(&x, &f).unwrap();
        let levels = tree.levels();
        assert_eq!(levels, ceil_log2(n), "n={n}: unexpected tree depth");

        let mut good = true;
        let touched = tree.update_entries(&[LeafUpdate::x(0, 1.25)]).unwrap();
        x[0] = 1.25;
        good &= touched <= levels + 1;

        let mut applied = 1usize;
        while applied < 1000 {
            let want = rng.gen_range(1..=8usize).min(1000 - applied);
            let mut batch = Vec::new();
            let mut seen: HashSet<(bool, usize)> = HashSet::new();
            while batch.len() < want {
                let is_x = rng.gen_bool(0.5);
                let idx = rng.gen_range(0..n);
                if !seen.insert((is_x, idx)) {
                    continue;
                }
                let val = rng.gen_range(-3.0..3.0);
                if is_x {
                    x[idx] = val;
                    batch.push(LeafUpdate::x(idx, val));
                } else {
                    f[idx] = val;
                    batch.push(LeafUpdate::f(idx, val));
                }
            }
            let touched = tree.update_entries(&batch).unwrap();
            good &= touched <= batch.len() * (levels + 1);
            applied += batch.len();
            for u in &batch {
                let got = match u.kind {
                    LeafKind::X => tree.get_x(u.index).unwrap(),
                    LeafKind::F => tree.get_f(u.index).unwrap(),
                };
                good &= got.to_bits() == u.value.to_bits();
            }
            let root_x = tree.partial_norm_x(0, 0).unwrap();
            let root_f = tree.partial_norm_f(0, 0).unwrap();
            good &= (root_x - l2(&x)).abs() <= 1e-12 * l2(&x).max(1.0);
            good &= (root_f - l2(&f)).abs() <= 1e-12 * l2(&f).max(1.0);
        }

        // Full parent-sum sweep after all updates: every internal node must
        // carry the squared sum of its children.
        for level in 0..levels {
            for node in 0..(1usize << level) {
                for read in [NormTree::partial_norm_x, NormTree::partial_norm_f] {
                    let parent = read(&tree, level, node).unwrap().powi(2);
                    let left = read(&tree, level + 1, 2 * node).unwrap().powi(2);
                    let right = read(&tree, level + 1, 2 * node + 1).unwrap().powi(2);
                    good &= (parent - (left + right)).abs() <= 1e-12 * parent.max(1e-300);
                }
            }
        }
        ok &= good;
        detail.push_str(&format!("n={n} {}; ", if good { "ok" } else { "violated" }));
    }
    verdict(
        7,
        "norm tree keeps partial sums, locality, and reads consistent",
        ok,
        detail.trim_end_matches("; ").into(),
    );
}

#[test]
fn a08_assembled_jacobian_matches_a_dense_difference_oracle() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, p) in &both(8) {
        let n = p.dim();
        let x = p.initial_guess();
        let r0 = residual_vector(p.as_ref(), &x).unwrap();
        let tree = NormTree::build(&x, &r0).unwrap();
        let sys = assemble(p.as_ref(), &tree, DifferenceScheme::Forward).unwrap();
        let mut worst = 0.0f64;
        // Brute force: perturb every variable and difference the full
        // residual vector, with no knowledge of the sparsity pattern.
        for k in 0..n {
            let step = fd_step(x[k]);
            let mut xp = x.clone();
            xp[k] += step;
            let rp = residual_vector(p.as_ref(), &xp).unwrap();
            for m in 0..n {
                let oracle = (rp[m] - r0[m]) / step;
                let got = sys.a.get(m, k) * sys.f_max;
                worst = worst.max((oracle - got).abs());
            }
        }
        ok &= worst <= 1e-6;
        detail.push_str(&format!("{name} worst abs {worst:.1e}; "));
    }

    // The diffusion stencil couples each node to itself, its left spatial
    // neighbor, and the previous time level; enumerate the boundary cases.
    let d = diffusion(8);
    let n1 = 8usize;
    let mut pattern_ok = true;
    let mut sup = Vec::new();
    for m in 0..d.dim() {
        d.row_support(m, &mut sup);
        let (i, j) = (m % n1, m / n1);
        let want: Vec<usize> = match (i == 0, j == 0) {
            (true, true) => vec![m],
            (false, true) => vec![m - 1, m],
            (true, false) => vec![m - n1, m],
            (false, false) => vec![m - n1, m - 1, m],
        };
        pattern_ok &= sup == want;
    }
    ok &= pattern_ok;
    detail.push_str(&format!("diffusion pattern {pattern_ok}"));
    verdict(
        8,
        "assembled Jacobian agrees with dense differencing and the stencil",
        ok,
        detail,
    );
}

#[test]
fn a09_analytic_fields_refine_monotonically() {
    fn series(resid: impl Fn(usize) -> Vec<f64>) -> (bool, String) {
        let mut prev = f64::INFINITY;
        let mut ok = true;
        let mut shown = Vec::new();
        for &n in &[8usize, 16, 32, 64] {
            let m = linf(&resid(n));
            ok &= m < prev;
            prev = m;
            shown.push(format!("{m:.2e}"));
        }
        (ok, shown.join(" > "))
    }
    let (ok_d, shown_d) = series(|n| {
        let p = diffusion(n);
        residual_vector(&p, &p.analytic_field()).unwrap()
    });
    let (ok_b, shown_b) = series(|n| {
        let p = beam(n);
        residual_vector(&p, &p.analytic_field()).unwrap()
    });
    verdict(
        9,
        "residual at the analytic field shrinks under grid doubling",
        ok_d && ok_b,
        format!("diffusion [{shown_d}], beam [{shown_b}]"),
    );
}

#[test]
fn a10_tail_weight_matches_exact_integer_arithmetic() {
    fn binom(n: u64, k: u64) -> u128 {
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc
    }
    let mut worst = 0.0f64;
    for c in 1..=30u64 {
        for j0 in [0, 1, c / 2, c, c + 3] {
            let mut sum: u128 = 0;
            for i in 1..=c {
                sum += (i.min(j0 + 1) as u128) * binom(2 * c, c + i);
            }
            let want = 4.0 * (sum as f64) / 3.0 / 2.0f64.powi(2 * c as i32);
            let got = alpha_from_c(c, j0, 3).unwrap();
            worst = worst.max((got - want).abs() / want);
        }
    }
    verdict(
        10,
        "log-space tail weight matches exact integer arithmetic for c <= 30",
        worst <= 1e-10,
        format!("worst rel {worst:.1e}"),
    );
}
