//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failures are reported but do not fail `cargo test` unless
//! `LORENZ_ACCEPTANCE_STRICT=1` is set.

use std::time::{Duration, Instant};

use clap::Parser;
use lorenz_cli::dataset::{meta_json, to_csv};
use lorenz_cli::{run, Cli, DatasetFile, Report};
use lorenz_core::curves::{check_validity_analytic, check_validity_numeric, Family, LorenzModel, DEFAULT_GRID};
use lorenz_core::estimation::{decile_shares, ewmd_fit, gq_iterative, gq_regression, FitConfig, GroupedDataset};
use lorenz_core::measures::{
    generalized_gini, generalized_gini_numeric, gini, gini_closed, gini_numeric, measure_set, EconomicContext,
    MeasureKind,
};
use lorenz_core::montecarlo::{group_shares, income_at, sample_incomes, simulate, RandomSource, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

struct Ledger {
    failed: usize,
}

impl Ledger {
    fn criterion(&mut self, id: u32, name: &str, limit: Option<Duration>, check: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => match limit {
                Some(l) if took > l => (false, format!("{detail}; too slow, limit {l:?}")),
                _ => (ok, detail),
            },
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name} ({:.2}s): {detail}", took.as_secs_f64());
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cli(args: &[&str]) -> Result<lorenz_cli::Outcome, String> {
    let parsed =
        Cli::try_parse_from(std::iter::once("lorenz").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&parsed.command).map_err(|e| e.to_string())
}

/// Draws for the agreement check: genuine parameters plus excursions in
/// directions where the domain constraint is also necessary. For L2 and L3
/// a < 0 is left out, since p^(a+d) stays convex when a + d >= 1, and b
/// stops at 1.5: closer to 2 the curvature breach near p = 1 sits below
/// double resolution.
fn agreement_draw(family: Family, r: &mut ChaCha8Rng) -> LorenzModel {
    match family {
        Family::KakwaniBeta => LorenzModel::KakwaniBeta {
            a: r.random_range(0.0..2.0),
            alpha: if r.random_bool(0.4) {
                1.0
            } else {
                r.random_range(0.05..2.0)
            },
            beta: r.random_range(0.05..2.0),
        },
        Family::KakwaniSpecial => LorenzModel::KakwaniSpecial {
            a: r.random_range(-0.5..2.0),
            beta: r.random_range(0.05..2.0),
        },
        Family::Ortega => LorenzModel::Ortega {
            a: r.random_range(-0.5..4.0),
            b: r.random_range(0.05..1.95),
        },
        Family::SarabiaL2 => LorenzModel::SarabiaL2 {
            a: r.random_range(0.0..4.0),
            b: r.random_range(0.05..1.5),
            d: r.random_range(1.0..4.0),
        },
        Family::L3 => {
            let b = r.random_range(0.05..1.5);
            let s = if b > 1.0 || r.random_bool(0.25) {
                1.0
            } else {
                r.random_range(0.05..1.0)
            };
            LorenzModel::L3 {
                a: r.random_range(0.0..4.0),
                b,
                d: r.random_range(1.0..4.0),
                s,
            }
        }
        Family::Gq => LorenzModel::Gq {
            a: r.random_range(-0.5..2.0),
            b: r.random_range(-2.0..0.5),
            c: r.random_range(-0.3..1.0),
        },
    }
}

/// Genuine parameters for each family.
fn valid_draw(family: Family, r: &mut ChaCha8Rng) -> LorenzModel {
    match family {
        Family::KakwaniBeta => LorenzModel::KakwaniBeta {
            a: r.random_range(0.0..=1.0),
            alpha: 1.0,
            beta: r.random_range(0.05..=1.0),
        },
        Family::KakwaniSpecial => LorenzModel::KakwaniSpecial {
            a: r.random_range(0.0..=1.0),
            beta: r.random_range(0.05..=1.0),
        },
        Family::Ortega => LorenzModel::Ortega {
            a: r.random_range(0.0..5.0),
            b: r.random_range(0.05..=1.0),
        },
        Family::SarabiaL2 => LorenzModel::SarabiaL2 {
            a: r.random_range(0.0..5.0),
            b: r.random_range(0.05..=1.0),
            d: r.random_range(1.0..5.0),
        },
        Family::L3 => LorenzModel::L3 {
            a: r.random_range(0.0..5.0),
            b: r.random_range(0.05..=1.0),
            d: r.random_range(1.0..5.0),
            s: if r.random_bool(0.25) {
                1.0
            } else {
                r.random_range(0.05..=1.0)
            },
        },
        Family::Gq => loop {
            let b: f64 = r.random_range(-1.8..-0.2);
            let c: f64 = r.random_range(0.0..0.5);
            let a = (b * b / 4.0 + 0.01 + r.random_range(0.0..1.0f64)).max(1.0 - c);
            let m = LorenzModel::Gq { a, b, c };
            if check_validity_analytic(&m).is_genuine() {
                break m;
            }
        },
    }
}

fn counterexample() -> Check {
    let out = cli(&["validate", "--model", "kakwani", "--params", "1,0.5,0.5"])?;
    let m = &out.report.models[0];
    let nu = m.numeric_validity.as_ref().ok_or("no numeric check")?;
    let (lo, hi) = nu.negative_region.ok_or("no negative region")?;
    let l_quarter = LorenzModel::KakwaniBeta {
        a: 1.0,
        alpha: 0.5,
        beta: 0.5,
    }
    .evaluate(0.25)
    .map_err(|e| e.to_string())?;
    // exact minimum of p − √(p(1−p)): (1 − √2)/2 at (2 − √2)/4
    let true_min = (1.0 - 2f64.sqrt()) / 2.0;
    let true_at = (2.0 - 2f64.sqrt()) / 4.0;
    let (min, at) = (nu.min_value.unwrap_or(f64::NAN), nu.min_at.unwrap_or(f64::NAN));
    let ok = out.exit_code == 2
        && !m.validity.is_genuine()
        && !nu.is_genuine()
        && lo > 0.0
        && lo <= 1e-4
        && (0.4999..0.5).contains(&hi)
        && (l_quarter + 0.183).abs() < 5e-4
        && (min - true_min).abs() < 1e-6
        && (at - true_at).abs() < 1e-3;
    Ok((
        ok,
        format!(
            "exit {}, L<0 on [{lo:.1e}, {hi:.4}], L(0.25) = {l_quarter:.4}, min {min:.5} at {at:.4}",
            out.exit_code
        ),
    ))
}

fn validity_agreement() -> Check {
    let mut r = rng(11);
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for family in Family::ALL {
        let mut genuine = 0;
        for _ in 0..1000 {
            let m = agreement_draw(family, &mut r);
            let an = check_validity_analytic(&m);
            let nu = check_validity_numeric(&m, DEFAULT_GRID);
            genuine += usize::from(an.is_genuine());
            if an.verdict != nu.verdict {
                bad.push(format!("{m:?}"));
            }
        }
        lines.push(format!("{}:{genuine}", family.cli_name()));
    }
    let detail = format!(
        "{} disagreements in 6000 draws (genuine per family {})",
        bad.len(),
        lines.join(" ")
    );
    let detail = match bad.first() {
        Some(first) => format!("{detail}; first {first}"),
        None => detail,
    };
    Ok((bad.is_empty(), detail))
}

fn gini_oracle() -> Check {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    let mut at_boundary = 0;
    for family in Family::ALL.into_iter().filter(|f| f.has_closed_gini()) {
        for _ in 0..500 {
            let m = valid_draw(family, &mut r);
            at_boundary += usize::from(matches!(m, LorenzModel::L3 { s, .. } if s == 1.0));
            let closed = gini_closed(&m).map_err(|e| format!("{m:?}: {e}"))?;
            let numeric = gini_numeric(&m).map_err(|e| format!("{m:?}: {e}"))?;
            worst = worst.max((closed - numeric).abs());
        }
    }
    Ok((
        worst <= 1e-8 && at_boundary > 0,
        format!("max |closed − (1 − 2∫L)| = {worst:.2e}; {at_boundary} L3 draws at s = 1"),
    ))
}

fn measure_bundle() -> Check {
    let m = LorenzModel::KakwaniSpecial { a: 1.0, beta: 1.0 };
    let ctx = EconomicContext::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let set = measure_set(&m, &ctx);
    let expect = [
        (MeasureKind::Headcount, 0.5),
        (MeasureKind::PovertyGap, 0.25),
        (MeasureKind::PovertySeverity, 1.0 / 6.0),
        (MeasureKind::Watts, 0.5),
        (MeasureKind::Gini, 1.0 / 3.0),
        (MeasureKind::Mld, 1.0 - 2f64.ln()),
    ];
    let mut worst: f64 = 0.0;
    for (k, want) in expect {
        let got = set.value(k).ok_or_else(|| format!("{} missing", k.name()))?;
        worst = worst.max((got - want).abs());
    }
    Ok((worst <= 1e-8, format!("max deviation {worst:.2e}")))
}

fn generalized_gini_check() -> Check {
    let mut r = rng(13);
    let mut worst_g1: f64 = 0.0;
    for family in Family::ALL {
        for _ in 0..50 {
            let m = valid_draw(family, &mut r);
            let g1 = generalized_gini(&m, 1.0).map_err(|e| e.to_string())?;
            let (g, _) = gini(&m).map_err(|e| e.to_string())?;
            worst_g1 = worst_g1.max((g1 - g).abs());
        }
    }
    let mut worst_nu: f64 = 0.0;
    for _ in 0..50 {
        let m = valid_draw(Family::KakwaniSpecial, &mut r);
        for nu in [1.0, 2.0, 3.0, 5.0] {
            let closed = generalized_gini(&m, nu).map_err(|e| e.to_string())?;
            let quad = generalized_gini_numeric(&m, nu).map_err(|e| e.to_string())?;
            worst_nu = worst_nu.max((closed - quad).abs());
        }
    }
    Ok((
        worst_g1 <= 1e-9 && worst_nu <= 1e-8,
        format!("max |G(1) − Gini| = {worst_g1:.2e}; max closed vs quadrature = {worst_nu:.2e}"),
    ))
}

fn recovery() -> Check {
    let mut r = rng(14);
    let config = FitConfig::default();
    let u = decile_shares();
    let mut counts = Vec::new();
    let mut ok = true;
    for family in Family::ALL {
        let mut good = 0;
        for _ in 0..100 {
            let m = valid_draw(family, &mut r);
            let data = GroupedDataset::from_model("truth", &m, &u, None, None).map_err(|e| e.to_string())?;
            let fit = ewmd_fit(&data, family, &config).map_err(|e| e.to_string())?;
            good += usize::from(fit.rss < 1e-10);
        }
        ok &= good >= 99;
        counts.push(format!("{}:{good}/100", family.cli_name()));
    }
    Ok((ok, counts.join(" ")))
}

fn random_truth(r: &mut ChaCha8Rng) -> LorenzModel {
    loop {
        let m = match r.random_range(0..5) {
            0 => LorenzModel::KakwaniSpecial {
                a: r.random_range(0.2..0.95),
                beta: r.random_range(0.2..3.0),
            },
            1 => LorenzModel::Ortega {
                a: r.random_range(0.1..2.0),
                b: r.random_range(0.2..0.95),
            },
            2 => LorenzModel::SarabiaL2 {
                a: r.random_range(0.1..2.0),
                b: r.random_range(0.2..0.95),
                d: r.random_range(1.0..3.0),
            },
            3 => LorenzModel::L3 {
                a: r.random_range(0.1..2.0),
                b: r.random_range(0.2..0.95),
                d: r.random_range(1.0..3.0),
                s: r.random_range(0.2..1.0),
            },
            _ => LorenzModel::Gq {
                a: r.random_range(0.5..1.2),
                b: r.random_range(-1.5..-0.5),
                c: r.random_range(0.1..0.5),
            },
        };
        if check_validity_analytic(&m).is_genuine() {
            return m;
        }
    }
}

fn simulation_trends() -> Check {
    let mut r = rng(2024);
    let (mut bias_ok, mut se_ok, mut cells) = (0, 0, 0);
    for i in 0..20 {
        let truth = random_truth(&mut r);
        // poverty line at the 30th percentile of the true distribution
        let z = income_at(&truth, 1.0, 0.3).map_err(|e| e.to_string())?;
        let runs = [500, 2500, 5000]
            .iter()
            .map(|&n| {
                let mut c = SimConfig::new(n, truth.family(), 7 + i);
                c.reps = 200;
                simulate(&truth, 1.0, z, &c).map_err(|e| format!("{truth:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for k in MeasureKind::ALL {
            let s: Vec<_> = runs.iter().map(|x| *x.stat(k)).collect();
            cells += 1;
            bias_ok += usize::from(s[2].abs_bias <= s[0].abs_bias);
            se_ok += usize::from(s[0].se > s[1].se && s[1].se > s[2].se);
        }
    }
    let bias_share = bias_ok as f64 / cells as f64;
    let se_share = se_ok as f64 / cells as f64;
    Ok((
        bias_share >= 0.90 && se_share >= 0.95,
        format!(
            "|bias| at N=5000 <= N=500 in {bias_ok}/{cells} cells ({:.1}%, need 90%); SE decreasing in {se_ok}/{cells} ({:.1}%, need 95%)",
            100.0 * bias_share,
            100.0 * se_share
        ),
    ))
}

fn sampling_pipeline() -> Check {
    let m = LorenzModel::KakwaniSpecial { a: 1.0, beta: 1.0 };
    let mean = 1.0;
    let incomes = sample_incomes(&m, mean, 100_000, &mut RandomSource::new(8)).map_err(|e| e.to_string())?;
    let data = group_shares(&incomes, 10).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (&u, &s) in data.u.iter().zip(&data.s) {
        worst = worst.max((m.evaluate(u).map_err(|e| e.to_string())? - s).abs());
    }
    let sample_mean = data.mean.ok_or("no sample mean")?;
    let rel = (sample_mean - mean).abs() / mean;
    Ok((
        worst <= 0.005 && rel <= 0.01,
        format!("max ordinate error {worst:.2e}, sample mean off by {:.3}%", 100.0 * rel),
    ))
}

fn determinism() -> Check {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let mut r = rng(19);
    for i in 0..4 {
        let m = valid_draw(Family::L3, &mut r);
        let data = GroupedDataset::from_model(format!("d{i}"), &m, &decile_shares(), Some(2.0), Some(1.0))
            .map_err(|e| e.to_string())?;
        let file = DatasetFile {
            data,
            reference: Default::default(),
            path: None,
        };
        std::fs::write(dir.path().join(format!("d{i}.csv")), to_csv(&file.data)).map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join(format!("d{i}.meta.json")), meta_json(&file)).map_err(|e| e.to_string())?;
    }
    let d = dir.path().to_str().ok_or("temp path")?;
    let runs: [&[&str]; 3] = [
        &[
            "simulate",
            "--model",
            "l3",
            "--params",
            "0.5,0.8,1.5,0.7",
            "--mean",
            "1",
            "--povline",
            "0.6",
            "--n",
            "300,900",
            "--reps",
            "40",
            "--seed",
            "31",
        ],
        &[
            "simulate",
            "--model",
            "gq",
            "--params",
            "0.8,-1.2,0.3",
            "--mean",
            "1",
            "--povline",
            "0.6",
            "--n",
            "400",
            "--reps",
            "40",
            "--refit",
            "ortega",
            "--seed",
            "31",
        ],
        &["batch", "--data", d, "--seed", "31"],
    ];
    let mut checked = 0;
    for args in runs {
        let mut outputs = Vec::new();
        for threads in [1, 4, 1] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            outputs.push(pool.install(|| cli(args))?.output);
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Ok((false, format!("`{}` output differs between runs", args[0])));
        }
        let parsed: Report = serde_json::from_str(&outputs[0]).map_err(|e| e.to_string())?;
        checked += parsed.simulations.len() + parsed.datasets.len();
        let again = cli(args)?.output;
        if again != outputs[0] {
            return Ok((false, format!("`{}` output differs on repeat", args[0])));
        }
    }
    Ok((
        true,
        format!(
            "simulate and batch byte-identical across 4 runs each of 3 commands, 1 and 4 threads ({checked} summaries)"
        ),
    ))
}

fn gq_benchmark() -> Check {
    let u = decile_shares();
    let s: Vec<f64> = u.iter().map(|x| x * x).collect();
    let data = GroupedDataset::new("squares", u.clone(), s, None, None).map_err(|e| e.to_string())?;
    let (reg_model, reg_rss) = gq_regression(&data).map_err(|e| e.to_string())?;
    let (it_model, it_rss) = gq_iterative(&data, &FitConfig::default()).map_err(|e| e.to_string())?;
    let rss_gap = (reg_rss - it_rss).abs();

    // endpoint identities on the fitted sets and on random admissible ones
    let mut sets = vec![reg_model, it_model];
    let mut r = rng(20);
    while sets.len() < 1002 {
        let m = LorenzModel::Gq {
            a: r.random_range(-1.0..3.0),
            b: r.random_range(-3.0..1.0),
            c: r.random_range(-1.0..2.0),
        };
        sets.push(m);
    }
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    for m in &sets {
        let LorenzModel::Gq { a, b, c } = *m else {
            unreachable!()
        };
        let e = -(a + b + c + 1.0);
        if !(e < 0.0 && a + c >= 1.0) {
            continue;
        }
        tested += 1;
        let l0 = m.evaluate(0.0).map_err(|e| format!("{m:?}: {e}"))?;
        let l1 = m.evaluate(1.0).map_err(|e| format!("{m:?}: {e}"))?;
        worst = worst.max(l0.abs()).max((l1 - 1.0).abs());
    }
    Ok((
        rss_gap <= 1e-10 && worst <= 1e-10 && tested > 2,
        format!(
            "regression rss {reg_rss:.3e} vs iterative {it_rss:.3e} (gap {rss_gap:.1e}); endpoint error {worst:.1e} over {tested} admissible sets"
        ),
    ))
}

fn main() {
    let mut ledger = Ledger { failed: 0 };
    let secs = Duration::from_secs;
    ledger.criterion(1, "non-genuine counterexample", Some(secs(1)), counterexample);
    ledger.criterion(
        2,
        "analytic and numeric validity agree",
        Some(secs(60)),
        validity_agreement,
    );
    ledger.criterion(3, "closed-form Gini matches 1 - 2*area", Some(secs(60)), gini_oracle);
    ledger.criterion(4, "measure bundle for L = p^2", Some(secs(1)), measure_bundle);
    ledger.criterion(5, "generalized Gini consistency", None, generalized_gini_check);
    ledger.criterion(6, "in-family recovery", Some(secs(300)), recovery);
    ledger.criterion(7, "simulation trends", Some(secs(900)), simulation_trends);
    ledger.criterion(8, "sampling pipeline", Some(secs(10)), sampling_pipeline);
    ledger.criterion(9, "determinism", None, determinism);
    ledger.criterion(10, "general quadratic benchmark", None, gq_benchmark);
    println!("{}/10 criteria passed", 10 - ledger.failed);
    if ledger.failed > 0 && std::env::var("LORENZ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
