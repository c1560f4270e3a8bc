//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use efcil_lab::lab::{
    analyze, render, results_csv, run_grid, write_grid_outputs, GridConfig, ReportFormat, DEFAULT_CONFIG,
};
use efcil_lab::learners::{AccuracyMatrix, BsilLoss, Dslda, DsldaParams, Predictor, TrainBatch};
use efcil_lab::linalg::Matrix;
use efcil_lab::metrics::{avg_forgetting, avg_incremental_accuracy};
use efcil_lab::stats::{anova_partial_eta2, encode_design, ols_fit, pairwise_comparison, EncodeOptions, Formula, Row};
use efcil_lab::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_fraction(rng: &mut rand_chacha::ChaCha8Rng, k: usize) -> (u64, u64) {
    match rng.random_range(0..3) {
        0 => (1, k as u64),
        1 => (1, 2),
        _ => {
            let den = rng.random_range(2..50u64);
            (rng.random_range(1..den), den)
        }
    }
}

fn metrics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(2..=12);
        let (rows, cum) = random_accuracy(&mut rng, k);
        let (bn, bd) = random_fraction(&mut rng, k);
        let a = AccuracyMatrix::new(rows.clone(), cum.clone()).map_err(|e| e.to_string())?;
        let acc = avg_incremental_accuracy(&a).map_err(|e| e.to_string())?;
        let f = avg_forgetting(&a, Ratio::new(bn, bd)).map_err(|e| e.to_string())?;
        worst = worst.max((acc - brute_avg_acc(&cum)).abs());
        worst = worst.max((f - brute_forgetting(&rows, bn, bd)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 1.0,
        format!("200 matrices, max |Δ| = {worst:.2e} (≤ 1e-12), {secs:.3} s (< 1 s)"),
    )
}

fn zero_forgetting() -> Outcome {
    let mut rng = rng(202);
    let mut nonzero = 0;
    let mut out_of_range = 0;
    let n = 2000;
    for _ in 0..n {
        let k = rng.random_range(2..=12);
        let (mut rows, cum) = random_accuracy(&mut rng, k);
        let (bn, bd) = random_fraction(&mut rng, k);
        let b = Ratio::new(bn, bd);
        let a = AccuracyMatrix::new(rows.clone(), cum.clone()).unwrap();
        let f = avg_forgetting(&a, b).unwrap();
        if !(0.0..=1.0).contains(&f) {
            out_of_range += 1;
        }
        // Raise the final row to each subset's running maximum.
        for i in 0..k {
            let best = (i..k).map(|s| rows[s][i]).fold(f64::MIN, f64::max);
            rows[k - 1][i] = best;
        }
        let a = AccuracyMatrix::new(rows, cum).unwrap();
        if avg_forgetting(&a, b).unwrap() != 0.0 {
            nonzero += 1;
        }
    }
    // Extremes: everything forgotten after perfect accuracy.
    for k in 2..=12 {
        let mut rows: Vec<Vec<f64>> = (0..k).map(|s| vec![1.0; s + 1]).collect();
        rows[k - 1] = vec![0.0; k];
        let a = AccuracyMatrix::new(rows, vec![0.5; k]).unwrap();
        let f = avg_forgetting(&a, Ratio::new(1, 2)).unwrap();
        if !(0.0..=1.0).contains(&f) {
            out_of_range += 1;
        }
    }
    check(
        nonzero == 0 && out_of_range == 0,
        format!(
            "{n} matrices: F = 0 exactly in {}/{n} running-max cases, {out_of_range} outside [0, 1]",
            n - nonzero
        ),
    )
}

fn ols_oracle() -> Outcome {
    let mut rng = rng(303);
    let (mut d_coef, mut d_p, mut d_score): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let p = rng.random_range(1..=10);
        let n = rng.random_range(p + 3..=200);
        let beta: Vec<f64> = (0..p)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    gaussian(&mut rng) * rng.random_range(0.05..2.0)
                }
            })
            .collect();
        let noise = rng.random_range(0.1..3.0);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut xr = vec![1.0];
            xr.extend((1..p).map(|_| gaussian(&mut rng) * 2.0 + 0.5));
            let yi: f64 = xr.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + noise * gaussian(&mut rng);
            let mut row = Row::new().num("y", yi);
            for (j, v) in xr.iter().enumerate().skip(1) {
                row = row.num(&format!("x{j}"), *v);
            }
            rows.push(row);
            x.push(xr);
            y.push(yi);
        }
        let terms: Vec<String> = (1..p).map(|j| format!("x{j}")).collect();
        let term_refs: Vec<&str> = terms.iter().map(String::as_str).collect();
        let formula = Formula::new("y", &term_refs).map_err(|e| e.to_string())?;
        let design = encode_design::<f64, _>(&rows, &formula, &EncodeOptions::default()).map_err(|e| e.to_string())?;
        let fit = ols_fit(&design).map_err(|e| e.to_string())?;

        let oracle = normal_equations(&x, &y);
        let resid: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(r, yi)| yi - r.iter().zip(&oracle).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let df = n - p;
        let sigma2 = resid.iter().map(|e| e * e).sum::<f64>() / df as f64;
        let mut xtx = vec![vec![0.0; p]; p];
        for r in &x {
            for i in 0..p {
                for j in 0..p {
                    xtx[i][j] += r[i] * r[j];
                }
            }
        }
        let inv = gauss_inverse(&xtx);
        for j in 0..p {
            d_coef = d_coef.max((fit.coefficients[j] - oracle[j]).abs());
            let t = oracle[j] / (sigma2 * inv[j][j]).sqrt();
            d_p = d_p.max((fit.p_values[j] - t_two_sided_p(t, df)).abs());
            let score: f64 = x.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            d_score = d_score.max(score.abs());
        }
    }
    check(
        d_coef <= 1e-8 && d_p <= 1e-6 && d_score <= 1e-8,
        format!("50 problems: coefficients {d_coef:.2e} (≤ 1e-8), p-values {d_p:.2e} (≤ 1e-6), |Xᵀe| {d_score:.2e} (≤ 1e-8)"),
    )
}

fn categorical_rows(rng: &mut rand_chacha::ChaCha8Rng, levels: usize, n: usize) -> Vec<Row> {
    let effects: Vec<f64> = (0..levels).map(|_| gaussian(rng) * 1.5).collect();
    let h_levels = rng.random_range(2..=4);
    let h_effects: Vec<f64> = (0..h_levels).map(|_| gaussian(rng)).collect();
    (0..n)
        .map(|i| {
            // Every level appears at least twice.
            let g = if i < 2 * levels {
                i % levels
            } else {
                rng.random_range(0..levels)
            };
            let h = if i < h_levels { i } else { rng.random_range(0..h_levels) };
            let x = gaussian(rng);
            let y = effects[g] + h_effects[h] + 0.3 * x + 0.8 * gaussian(rng);
            Row::new()
                .cat("g", format!("L{g:02}"))
                .cat("h", format!("H{h}"))
                .num("x", x)
                .num("y", y)
        })
        .collect()
}

fn reference_invariance() -> Outcome {
    let mut rng = rng(404);
    let formula: Formula = "y ~ g + h + x".parse().map_err(|e: efcil_lab::Error| e.to_string())?;
    let (mut d_fit, mut d_anti) = (0.0f64, 0.0f64);
    let mut subset_cases = 0;
    let mut significant = 0;
    for _ in 0..20 {
        let levels = rng.random_range(3..=7);
        let n = rng.random_range(4 * levels..=120);
        let rows = categorical_rows(&mut rng, levels, n);
        let base = ols_fit(&encode_design::<f64, _>(&rows, &formula, &EncodeOptions::default()).unwrap()).unwrap();
        for l in 0..levels {
            let opts = EncodeOptions::default().with_reference("g", &format!("L{l:02}"));
            let fit = ols_fit(&encode_design::<f64, _>(&rows, &formula, &opts).unwrap()).unwrap();
            for (a, b) in fit.fitted.iter().zip(&base.fitted) {
                d_fit = d_fit.max((a - b).abs());
            }
        }
        let m = pairwise_comparison::<f64, _>(&rows, &formula, "g", 0.05, None, &EncodeOptions::default())
            .map_err(|e| e.to_string())?;
        let mut subset = true;
        for i in 0..levels {
            for j in 0..levels {
                if i == j {
                    continue;
                }
                let (a, b) = (m.gain[i][j].unwrap(), m.gain[j][i].unwrap());
                d_anti = d_anti.max((a + b).abs());
                if m.significant[i][j] {
                    significant += 1;
                    subset &= m.significant_uncorrected[i][j];
                }
            }
        }
        subset_cases += usize::from(subset);
    }
    check(
        d_fit <= 1e-10 && d_anti <= 1e-12 && subset_cases == 20,
        format!(
            "20 designs: fitted values {d_fit:.2e} (≤ 1e-10), antisymmetry {d_anti:.2e} (≤ 1e-12), \
             Bonferroni ⊆ uncorrected in {subset_cases}/20 ({significant} significant cells)"
        ),
    )
}

/// Hand-built treatment coding for `terms` over rows with categoricals a, b
/// and numeric x; `a:b` uses products of the main-effect indicators.
fn oracle_design(rows: &[Row], terms: &[&str]) -> Vec<Vec<f64>> {
    let levels = |v: &str| {
        let mut l: Vec<String> = rows.iter().map(|r| r.categorical[v].clone()).collect();
        l.sort();
        l.dedup();
        l
    };
    let (la, lb) = (levels("a"), levels("b"));
    rows.iter()
        .map(|r| {
            let ia: Vec<f64> = la[1..]
                .iter()
                .map(|l| f64::from(u8::from(&r.categorical["a"] == l)))
                .collect();
            let ib: Vec<f64> = lb[1..]
                .iter()
                .map(|l| f64::from(u8::from(&r.categorical["b"] == l)))
                .collect();
            let mut out = vec![1.0];
            for t in terms {
                match *t {
                    "a" => out.extend(&ia),
                    "b" => out.extend(&ib),
                    "x" => out.push(r.numeric["x"]),
                    "a:b" => {
                        for u in &ia {
                            for v in &ib {
                                out.push(u * v);
                            }
                        }
                    }
                    other => panic!("unknown term {other}"),
                }
            }
            out
        })
        .collect()
}

fn anova_identity() -> Outcome {
    let mut rng = rng(505);
    let mut d_eta: f64 = 0.0;
    let mut d_order: f64 = 0.0;
    for case in 0..20 {
        let (na, nb) = (rng.random_range(2..=4), rng.random_range(2..=3));
        let n = rng.random_range(3 * na * nb..=150);
        let ea: Vec<f64> = (0..na).map(|_| gaussian(&mut rng)).collect();
        let eb: Vec<f64> = (0..nb).map(|_| gaussian(&mut rng)).collect();
        let rows: Vec<Row> = (0..n)
            .map(|i| {
                let (a, b) = if i < na * nb {
                    (i % na, i / na)
                } else {
                    (rng.random_range(0..na), rng.random_range(0..nb))
                };
                let x = gaussian(&mut rng);
                let y = ea[a] + eb[b] + 0.5 * x + 0.2 * (a * b) as f64 + gaussian(&mut rng);
                Row::new()
                    .cat("a", format!("a{a}"))
                    .cat("b", format!("b{b}"))
                    .num("x", x)
                    .num("y", y)
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r.numeric["y"]).collect();
        let with_interaction = case % 2 == 0;
        let terms: Vec<&str> = if with_interaction {
            vec!["a", "b", "x", "a:b"]
        } else {
            vec!["a", "b", "x"]
        };
        let formula = Formula::new("y", &terms).map_err(|e| e.to_string())?;
        let table =
            anova_partial_eta2::<f64, _>(&rows, &formula, &EncodeOptions::default()).map_err(|e| e.to_string())?;
        let rss_full = residual_ss(&oracle_design(&rows, &terms), &y);
        for t in &terms {
            // Type II: compare the models with and without `t` among terms not containing it.
            let keep: Vec<&str> = terms
                .iter()
                .copied()
                .filter(|o| !(o.contains(':') && *o != *t && o.contains(*t)))
                .collect();
            let without: Vec<&str> = keep.iter().copied().filter(|o| o != t).collect();
            let ss = residual_ss(&oracle_design(&rows, &without), &y) - residual_ss(&oracle_design(&rows, &keep), &y);
            let eta = ss / (ss + rss_full);
            let row = table.row(t).ok_or(format!("missing ANOVA row {t}"))?;
            d_eta = d_eta.max((row.partial_eta2 - eta).abs());
        }
        let mut shuffled = terms.clone();
        shuffled.shuffle(&mut rng);
        let other =
            anova_partial_eta2::<f64, _>(&rows, &Formula::new("y", &shuffled).unwrap(), &EncodeOptions::default())
                .map_err(|e| e.to_string())?;
        for r in &table.rows {
            let o = other.row(&r.term).ok_or(format!("missing row {}", r.term))?;
            d_order = d_order
                .max((r.sum_sq - o.sum_sq).abs())
                .max((r.partial_eta2 - o.partial_eta2).abs());
        }
    }
    // Two-level factor that determines the response exactly.
    let rows: Vec<Row> = (0..40)
        .map(|i| {
            let hi = i % 2 == 0;
            Row::new()
                .cat("g", if hi { "hi" } else { "lo" })
                .num("x", ((i * 7919) % 97) as f64 / 97.0)
                .num("y", if hi { 5.0 } else { 2.0 })
        })
        .collect();
    let t = anova_partial_eta2::<f64, _>(&rows, &"y ~ g + x".parse().unwrap(), &EncodeOptions::default())
        .map_err(|e| e.to_string())?;
    let eta_g = t.row("g").unwrap().partial_eta2;
    check(
        d_eta <= 1e-9 && d_order <= 1e-9 && (eta_g - 1.0).abs() <= 1e-12,
        format!("20 designs: η² vs oracle {d_eta:.2e}, order invariance {d_order:.2e}; noiseless 2-level η² = {eta_g}"),
    )
}

fn dslda_streaming() -> Outcome {
    let mut rng = rng(606);
    let mut worst: f64 = 0.0;
    let (mut agree, mut total) = (0usize, 0usize);
    for _ in 0..20 {
        let d = rng.random_range(2..=16);
        let c = rng.random_range(2..=8);
        let shrinkage = if rng.random_bool(0.5) {
            1e-4
        } else {
            rng.random_range(0.01..0.9)
        };
        let centers: Vec<Vec<f64>> = (0..c)
            .map(|_| (0..d).map(|_| 3.0 * gaussian(&mut rng)).collect())
            .collect();
        let mix: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| gaussian(&mut rng) * 0.7).collect())
            .collect();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<f64> {
            let z: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
            (0..d)
                .map(|i| centers[k][i] + (0..d).map(|j| mix[i][j] * z[j]).sum::<f64>() + 0.3 * z[i])
                .collect()
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..c {
            for _ in 0..rng.random_range(d + 2..=40) {
                rows.push(draw(&mut rng, k));
                labels.push(k as u32);
            }
        }
        // Stream the classes in a random order of steps, samples shuffled within each step.
        let mut order: Vec<u32> = (0..c as u32).collect();
        order.shuffle(&mut rng);
        let mut lda = Dslda::<f64>::new(DsldaParams { shrinkage }).unwrap();
        for chunk in order.chunks(rng.random_range(1..=c)) {
            let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| chunk.contains(&labels[i])).collect();
            idx.shuffle(&mut rng);
            let batch = TrainBatch::new(
                idx.iter().map(|&i| rows[i].as_slice()).collect(),
                idx.iter().map(|&i| labels[i]).collect(),
            )
            .unwrap();
            lda.step(&batch).map_err(|e| e.to_string())?;
        }
        let Predictor::Linear { classes, weights, bias } = lda.predictor().map_err(|e| e.to_string())? else {
            return Err("DSLDA must yield a linear predictor".into());
        };
        let (oc, ow, ob) = batch_lda(&rows, &labels, shrinkage);
        if classes != oc {
            return Err("class sets differ".into());
        }
        let scale = ow.iter().flatten().chain(&ob).fold(0.0f64, |m, v| m.max(v.abs()));
        for (r, (w, b)) in ow.iter().zip(&ob).enumerate() {
            for (j, v) in w.iter().enumerate() {
                worst = worst.max((weights[(r, j)] - v).abs() / scale);
            }
            worst = worst.max((bias[r] - b).abs() / scale);
        }
        for _ in 0..200 {
            let k = rng.random_range(0..c);
            let x = draw(&mut rng, k);
            let score = |r: usize| -> f64 { ow[r].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + ob[r] };
            let best = (0..c)
                .max_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap())
                .unwrap();
            let streaming = Predictor::Linear {
                classes: classes.clone(),
                weights: weights.clone(),
                bias: bias.clone(),
            }
            .predict(&x);
            agree += usize::from(streaming == oc[best]);
            total += 1;
        }
    }
    check(
        worst <= 1e-6 && agree == total,
        format!("20 datasets: max relative error {worst:.2e} (≤ 1e-6), predictions agree on {agree}/{total}"),
    )
}

fn bsil_gradient() -> Outcome {
    let mut rng = rng(707);
    let mut worst: f64 = 0.0;
    let mut worst_equal: f64 = 0.0;
    for _ in 0..10 {
        let c = rng.random_range(2..=6);
        let d = rng.random_range(2..=10);
        let n = rng.random_range(c..=40);
        let feats: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| gaussian(&mut rng) + 0.5).collect())
            .collect();
        let refs: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
        let targets: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
        let mut counts = vec![0usize; c];
        targets.iter().for_each(|&t| counts[t] += 1);
        let anchored = rng.random_range(0..c);
        let anchor: Vec<(usize, Vec<f64>)> = (0..anchored)
            .map(|r| (r, (0..d).map(|_| gaussian(&mut rng)).collect()))
            .collect();
        let loss = BsilLoss {
            features: &refs,
            targets: &targets,
            offsets: counts.iter().map(|&k| (k as f64).ln()).collect(),
            anchor,
            lambda: rng.random_range(0.0..2.0),
        };
        let w = Matrix::from_vec(c, d, (0..c * d).map(|_| gaussian(&mut rng)).collect());
        let scale = rng.random_range(1.0..16.0);
        let (_, gw, gs) = loss.value_and_grad(&w, scale);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
        let h = 1e-5;
        for i in 0..c {
            for j in 0..d {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[(i, j)] += h;
                wm[(i, j)] -= h;
                let num = (loss.value(&wp, scale) - loss.value(&wm, scale)) / (2.0 * h);
                worst = worst.max(rel(gw[(i, j)], num));
            }
        }
        let num = (loss.value(&w, scale + h) - loss.value(&w, scale - h)) / (2.0 * h);
        worst = worst.max(rel(gs, num));

        // Equal counts: the balanced offsets are a constant shift of every logit.
        let m = rng.random_range(1..=20);
        let eq_targets: Vec<usize> = (0..c * m).map(|i| i % c).collect();
        let eq_feats: Vec<Vec<f64>> = (0..c * m)
            .map(|_| (0..d).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let eq_refs: Vec<&[f64]> = eq_feats.iter().map(Vec::as_slice).collect();
        let make = |offset: f64| BsilLoss {
            features: &eq_refs,
            targets: &eq_targets,
            offsets: vec![offset; c],
            anchor: Vec::new(),
            lambda: 0.0,
        };
        let (lb, gb, sb) = make((m as f64).ln()).value_and_grad(&w, scale);
        let (lp, gp, sp) = make(0.0).value_and_grad(&w, scale);
        worst_equal = worst_equal.max((lb - lp).abs()).max((sb - sp).abs());
        for (a, b) in gb.as_slice().iter().zip(gp.as_slice()) {
            worst_equal = worst_equal.max((a - b).abs());
        }
    }
    check(
        worst <= 1e-4 && worst_equal <= 1e-12,
        format!("10 configurations: max relative gradient error {worst:.2e} (≤ 1e-4); balanced vs plain {worst_equal:.2e} (≤ 1e-12)"),
    )
}

struct GridRun {
    secs: f64,
    files: BTreeMap<String, Vec<u8>>,
    results: String,
    records: Vec<efcil_lab::stats::RunRecord>,
    eta_order: Vec<(String, f64)>,
}

fn read_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn default_grid() -> Result<GridRun, String> {
    let cfg = GridConfig::from_toml_str(DEFAULT_CONFIG).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let grid = run_grid(&cfg, None).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    if !grid.all_succeeded() {
        return Err(format!(
            "{} runs failed: {:?}",
            grid.failures().len(),
            grid.failures().first()
        ));
    }
    let records = grid.records();
    let results = results_csv(&records, &grid.config_hash, &grid.version).map_err(|e| e.to_string())?;
    let bundle = analyze(&records, &cfg.analysis, &grid.config_hash, &grid.version).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_grid_outputs(dir.path(), &grid, &cfg.to_toml_string()).map_err(|e| e.to_string())?;
    let mut files = read_tree(dir.path());
    files.insert("bundle.ron".into(), bundle.to_ron().into_bytes());
    for (name, text) in
        render(&bundle, &[ReportFormat::Csv, ReportFormat::Md, ReportFormat::Svg]).map_err(|e| e.to_string())?
    {
        files.insert(format!("report/{name}"), text.into_bytes());
    }
    let table = bundle
        .anova
        .iter()
        .find(|t| t.formula == "forgetting ~ incr + train + data")
        .ok_or("no ANOVA for forgetting ~ incr + train + data")?;
    let eta_order = table
        .ranked()
        .iter()
        .map(|r| (r.term.clone(), r.partial_eta2))
        .collect();
    Ok(GridRun {
        secs,
        files,
        results,
        records,
        eta_order,
    })
}

fn qualitative(run: &GridRun) -> Outcome {
    let mut by_incr: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in &run.records {
        let e = by_incr.entry(r.incr.as_str()).or_default();
        e.0 += r.forgetting;
        e.1 += 1;
    }
    let mean = |k: &str| by_incr.get(k).map(|(s, n)| s / *n as f64);
    let bsil = mean("bsil").ok_or("no bsil runs")?;
    let frozen: Vec<(&str, f64)> = ["dslda", "fetril", "ncm"]
        .iter()
        .map(|k| mean(k).map(|m| (*k, m)).ok_or(format!("no {k} runs")))
        .collect::<Result<_, _>>()?;
    let first = run.eta_order.first().map(|(t, _)| t.as_str()).unwrap_or("");
    let ranking: Vec<String> = run.eta_order.iter().map(|(t, e)| format!("{t} {e:.3}")).collect();
    let means: Vec<String> = frozen.iter().map(|(k, m)| format!("{k} {m:.3}")).collect();
    check(
        run.records.len() == 216 && run.secs < 120.0 && first == "incr" && frozen.iter().all(|(_, m)| *m < bsil),
        format!(
            "{} runs in {:.1} s; partial η² {}; mean F {} < bsil {bsil:.3}",
            run.records.len(),
            run.secs,
            ranking.join(", "),
            means.join(", ")
        ),
    )
}

fn correlation_sign(run: &GridRun) -> Outcome {
    let a: Vec<f64> = run.records.iter().map(|r| r.avg_acc).collect();
    let b: Vec<f64> = run.records.iter().map(|r| r.acc_k).collect();
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    let r = cov / (va * vb).sqrt();
    check(r > 0.0, format!("corr(avg_acc, accK) = {r:.3}"))
}

fn determinism(first: &GridRun) -> Outcome {
    let second = default_grid()?;
    let differing: Vec<&String> = first
        .files
        .keys()
        .chain(second.files.keys())
        .filter(|k| first.files.get(*k) != second.files.get(*k))
        .collect();
    check(
        first.results == second.results && differing.is_empty(),
        format!(
            "{} output files compared, {} differ{}",
            first.files.len(),
            differing.len(),
            differing.first().map(|k| format!(" (first: {k})")).unwrap_or_default()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("metrics oracle", metrics_oracle()),
        ("zero-forgetting property", zero_forgetting()),
        ("OLS oracle", ols_oracle()),
        ("reference invariance and pairwise antisymmetry", reference_invariance()),
        ("ANOVA identity", anova_identity()),
        ("DSLDA streaming equals batch", dslda_streaming()),
        ("BSIL gradient check", bsil_gradient()),
    ];
    match default_grid() {
        Ok(run) => {
            results.push((
                "default grid: incr ranks first for forgetting; frozen learners forget less",
                qualitative(&run),
            ));
            results.push((
                "default grid: average and final accuracy correlate positively",
                correlation_sign(&run),
            ));
            results.push(("determinism", determinism(&run)));
        }
        Err(e) => {
            for name in [
                "default grid qualitative ordering",
                "default grid correlation sign",
                "determinism",
            ] {
                results.push((name, Err(format!("grid failed: {e}"))));
            }
        }
    }
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
