//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `VSCC_ACCEPTANCE=2,4` runs a subset of criteria. The process exits
//! non-zero on a FAIL only when `VSCC_ACCEPTANCE_STRICT` is set.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vscc_cli::ingest_csv;
use vscc_core::{
    adjusted_rand_index, correlation_matrix, fit_em, generate, replicate_study, run_clustering,
    select_all, select_variables, standardize, threshold, uncertainty, within_group_variances,
    CorrelationMatrix, CovarianceModel, Dataset, FitConfig, Membership, Partition, Pipeline,
    Relationship, SimSpec, SoftAssignment, VsccOptions, VsccReport, WithinGroupVariances,
};

const SEEDS: u64 = 10;

struct Verdict {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Chosen and full-set uncertainty from every run that kept the full set.
#[derive(Default)]
struct NoHarmLog {
    entries: Vec<(String, f64, f64)>,
}

impl NoHarmLog {
    fn record(&mut self, context: String, report: &VsccReport) {
        if let Some(full) = report.full_set().and_then(|c| c.uncertainty) {
            let chosen = report.chosen().uncertainty.expect("chosen candidate is scored");
            self.entries.push((context, chosen, full));
        }
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

struct SeedRun {
    seed: u64,
    chosen_ari: f64,
    full_ari: Option<f64>,
    chosen_u: f64,
    vars: Vec<String>,
    relationship: String,
    runtime_s: f64,
    candidates: Vec<Vec<String>>,
}

impl SeedRun {
    fn describe(&self) -> String {
        format!(
            "seed {} {} [{}] ARI {:.3} (full set {}) uncertainty {:.3} in {:.1}s",
            self.seed,
            self.relationship,
            self.vars.join(","),
            self.chosen_ari,
            self.full_ari.map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into()),
            self.chosen_u,
            self.runtime_s
        )
    }
}

/// Clusters a shipped dataset once per seed with the full set kept.
fn real_data(file: &str, label: &str, log: &mut NoHarmLog) -> Result<Vec<SeedRun>, String> {
    let path = data_dir().join(file);
    if !path.exists() {
        return Err(format!("dataset not available: data/{file} is missing"));
    }
    let header = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let header: Vec<&str> = header.lines().next().unwrap_or("").split(',').map(str::trim).collect();
    let mut cols = vec![label];
    // a second categorical column (coffee's country of origin) is not a variable
    cols.extend(["Country"].into_iter().filter(|c| *c != label && header.contains(c)));
    let ingested = ingest_csv(&path, &cols).map_err(|e| e.to_string())?;
    let truth = ingested.labels[0]
        .partition()
        .ok_or_else(|| format!("{label} has blank cells"))?;
    let ds = &ingested.dataset;
    let names = ds.names();
    let mut runs = Vec::new();
    for seed in 0..SEEDS {
        let start = Instant::now();
        let report = match run_clustering(ds, &FitConfig::default().with_seed(seed), VsccOptions::default()) {
            Ok(r) => r,
            Err(e) => {
                println!("    {file} seed {seed}: {e}");
                continue;
            }
        };
        let runtime_s = start.elapsed().as_secs_f64();
        log.record(format!("{file} seed {seed}"), &report);
        let ari = |p: Partition| adjusted_rand_index(&p, &truth).expect("same length");
        let chosen = report.chosen();
        let run = SeedRun {
            seed,
            chosen_ari: ari(report.chosen_partition()),
            full_ari: report
                .full_set()
                .and_then(|c| c.fit.as_ref())
                .map(|f| ari(vscc_core::harden(&f.assignment))),
            chosen_u: chosen.uncertainty.expect("chosen candidate is scored"),
            vars: chosen.subset.indices.iter().map(|&j| names[j].clone()).collect(),
            relationship: chosen.subset.origin.to_string(),
            runtime_s,
            candidates: report
                .candidates
                .iter()
                .map(|c| c.subset.indices.iter().map(|&j| names[j].clone()).collect())
                .collect(),
        };
        println!("    {file}: {}", run.describe());
        runs.push(run);
    }
    if runs.is_empty() {
        return Err("every seed failed".into());
    }
    Ok(runs)
}

fn has_var(vars: &[String], needle: &str) -> bool {
    vars.iter().any(|v| v.to_ascii_lowercase().contains(needle))
}

fn fat_caffeine_pair(vars: &[String]) -> bool {
    vars.len() == 2 && has_var(vars, "fat") && has_var(vars, "caffeine")
}

fn criterion_1(log: &mut NoHarmLog) -> Verdict {
    let name = "coffee study";
    let runs = match real_data("coffee.csv", "Variety", log) {
        Ok(r) => r,
        Err(e) => return Verdict { id: 1, name, pass: false, detail: e },
    };
    let strict = runs.iter().find(|r| {
        r.chosen_ari >= 0.995 && fat_caffeine_pair(&r.vars) && r.chosen_u < 0.05 && r.runtime_s < 10.0
    });
    if let Some(r) = strict {
        return Verdict { id: 1, name, pass: true, detail: r.describe() };
    }
    // with no seed at ARI 1.00 the bound relaxes to 0.90 with the pair still generated
    let reached_one = runs.iter().any(|r| r.chosen_ari >= 0.995);
    let relaxed = runs.iter().find(|r| {
        r.chosen_ari >= 0.90 && r.runtime_s < 10.0 && r.candidates.iter().any(|c| fat_caffeine_pair(c))
    });
    match (reached_one, relaxed) {
        (false, Some(r)) => Verdict {
            id: 1,
            name,
            pass: true,
            detail: format!("relaxed bound: {}", r.describe()),
        },
        _ => Verdict {
            id: 1,
            name,
            pass: false,
            detail: best(&runs).describe(),
        },
    }
}

fn best(runs: &[SeedRun]) -> &SeedRun {
    runs.iter()
        .max_by(|a, b| a.chosen_ari.total_cmp(&b.chosen_ari))
        .expect("at least one run")
}

fn criterion_2(log: &mut NoHarmLog) -> Verdict {
    let name = "wine study";
    let runs = match real_data("wine.csv", "Type", log) {
        Ok(r) => r,
        Err(e) => return Verdict { id: 2, name, pass: false, detail: e },
    };
    let ok = |r: &SeedRun| {
        r.chosen_ari >= 0.75 && r.full_ari.is_some_and(|f| r.chosen_ari - f >= 0.10) && r.runtime_s < 60.0
    };
    match runs.iter().find(|r| ok(r)) {
        Some(r) => Verdict { id: 2, name, pass: true, detail: r.describe() },
        None => Verdict {
            id: 2,
            name,
            pass: false,
            detail: format!("no seed reached ARI >= 0.75 and +0.10 over the full set; best {}", best(&runs).describe()),
        },
    }
}

fn criterion_3(log: &mut NoHarmLog) -> Verdict {
    let name = "bank notes study";
    let runs = match real_data("banknote.csv", "Status", log) {
        Ok(r) => r,
        Err(e) => return Verdict { id: 3, name, pass: false, detail: e },
    };
    match runs
        .iter()
        .find(|r| r.chosen_ari >= 0.80 && r.vars.len() <= 5 && r.runtime_s < 60.0)
    {
        Some(r) => Verdict { id: 3, name, pass: true, detail: r.describe() },
        None => Verdict { id: 3, name, pass: false, detail: best(&runs).describe() },
    }
}

fn criterion_4(log: &mut NoHarmLog) -> Verdict {
    let name = "crabs study";
    let runs = match real_data("crabs.csv", "Group", log) {
        Ok(r) => r,
        Err(e) => return Verdict { id: 4, name, pass: false, detail: e },
    };
    match runs
        .iter()
        .find(|r| r.chosen_ari >= 0.50 && r.full_ari.is_some_and(|f| r.chosen_ari >= f))
    {
        Some(r) => Verdict { id: 4, name, pass: true, detail: r.describe() },
        None => Verdict { id: 4, name, pass: false, detail: best(&runs).describe() },
    }
}

fn criterion_5() -> Verdict {
    let spec = SimSpec {
        groups: 4,
        n_per_group: (100, 150),
        p_signal: 30,
        p_noise: 15,
        separation: 0.7,
        seed: 2011,
    };
    let start = Instant::now();
    let study = replicate_study(&spec, 25, Pipeline::Vscc { include_full_set: false }, &FitConfig::default());
    let elapsed = start.elapsed().as_secs_f64();
    let name = "dimension sweep, p=45";
    let study = match study {
        Ok(s) => s,
        Err(e) => return Verdict { id: 5, name, pass: false, detail: e.to_string() },
    };
    let baseline = study.mean_full_set_ari.unwrap_or(0.0);
    let pass = study.mean_ari - baseline >= 0.05 && study.mean_ari >= 0.85 && elapsed < 900.0;
    Verdict {
        id: 5,
        name,
        pass,
        detail: format!(
            "VSCC mean ARI {:.3} (sd {:.3}), full-set mean ARI {:.3}, margin {:+.3}, {} failures, {:.0}s total",
            study.mean_ari,
            study.sd_ari,
            baseline,
            study.mean_ari - baseline,
            study.failures,
            elapsed
        ),
    }
}

fn criterion_6() -> Verdict {
    let spec = SimSpec {
        groups: 8,
        n_per_group: (100, 150),
        p_signal: 10,
        p_noise: 10,
        separation: 0.45,
        seed: 2011,
    };
    let pipeline = Pipeline::Supervised {
        label_fraction: 0.5,
        include_full_set: false,
    };
    let name = "supervised study, G=8";
    let study = match replicate_study(&spec, 25, pipeline, &FitConfig::default()) {
        Ok(s) => s,
        Err(e) => return Verdict { id: 6, name, pass: false, detail: e.to_string() },
    };
    let reps = study.rows.len() as f64;
    let exact = study.rows.iter().filter(|r| r.exact_signal).count();
    let clean = study.rows.iter().filter(|r| r.noise_free).count();
    let pass = exact as f64 >= 0.6 * reps && clean as f64 >= 0.8 * reps;
    Verdict {
        id: 6,
        name,
        pass,
        detail: format!(
            "exact signal set {exact}/25, noise-free {clean}/25, mean unlabeled ARI {:.3} vs full set {:.3}",
            study.mean_ari,
            study.mean_full_set_ari.unwrap_or(0.0)
        ),
    }
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let values = DMatrix::from_fn(n, p, |_, _| rng.random_range(-3.0..3.0));
    Dataset::from_rows(
        &values
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect::<Vec<Vec<f64>>>(),
    )
    .expect("finite random data")
}

fn random_soft(rng: &mut ChaCha8Rng, n: usize, g: usize) -> SoftAssignment {
    let mut probs = DMatrix::from_fn(n, g, |_, _| rng.random_range(0.0..1.0f64).powi(3) + 1e-9);
    for mut row in probs.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    SoftAssignment::new(probs).expect("rows sum to one")
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, g: usize) -> Partition {
    let labels = (0..n)
        .map(|i| if i < g { i + 1 } else { rng.random_range(1..=g) })
        .collect();
    Partition::new(labels, g).expect("labels in range")
}

/// Within-group scatter through pairwise differences:
/// `sum_g sum_{i,k} z_ig z_kg (x_i - x_k)^2 / (2 N_g)`, over `n`.
fn w_pairwise(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Vec<f64> {
    let (n, p) = x.shape();
    (0..p)
        .map(|j| {
            let mut total = 0.0;
            for g in 0..z.ncols() {
                let ng: f64 = z.column(g).sum();
                let mut s = 0.0;
                for i in 0..n {
                    for k in 0..n {
                        let d = x[(i, j)] - x[(k, j)];
                        s += z[(i, g)] * z[(k, g)] * d * d;
                    }
                }
                total += s / (2.0 * ng);
            }
            total / n as f64
        })
        .collect()
}

fn check_w_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for case in 0..1000 {
        let n = rng.random_range(4..30);
        let p = rng.random_range(1..=6);
        let g = rng.random_range(1..=3.min(n));
        let ds = random_dataset(&mut rng, n, p);
        let (got, z) = if case % 2 == 0 {
            let part = random_partition(&mut rng, n, g);
            let w = within_group_variances(&ds, Membership::Hard(&part)).map_err(|e| e.to_string())?;
            (w, part.to_soft().probs().clone())
        } else {
            let soft = random_soft(&mut rng, n, g);
            let w = within_group_variances(&ds, Membership::Soft(&soft)).map_err(|e| e.to_string())?;
            (w, soft.probs().clone())
        };
        let want = w_pairwise(ds.values(), &z);
        for (a, b) in got.w.iter().zip(&want) {
            if (a - b).abs() > 1e-12 * b.abs().max(1.0) {
                return Err(format!("W mismatch on instance {case}: {a} vs {b}"));
            }
        }
    }
    Ok("W equals the pairwise-difference oracle on 1000 instances".into())
}

fn random_correlation(rng: &mut ChaCha8Rng, p: usize) -> CorrelationMatrix {
    let n = p + rng.random_range(2..8);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mix: f64 = rng.random_range(0.0..0.9);
    for _ in 0..n {
        let shared: f64 = rng.random_range(-1.0..1.0);
        rows.push((0..p).map(|_| mix * shared + rng.random_range(-1.0..1.0)).collect());
    }
    let ds = Dataset::from_rows(&rows).expect("finite");
    correlation_matrix(&ds).expect("non-constant columns")
}

/// The selection for one relationship is the only subset `S` for which
/// every variable is in `S` exactly when it is first in ascending-W order
/// or clears the bound against every member of `S` ranked before it.
fn consistent_subsets(w: &[f64], rho: &CorrelationMatrix, rel: Relationship) -> Vec<Vec<usize>> {
    let p = w.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let rank: Vec<usize> = {
        let mut r = vec![0; p];
        for (pos, &j) in order.iter().enumerate() {
            r[j] = pos;
        }
        r
    };
    let mut found = Vec::new();
    for mask in 0u32..(1 << p) {
        let inside = |j: usize| mask & (1 << j) != 0;
        let consistent = (0..p).all(|k| {
            let earlier: Vec<usize> = (0..p).filter(|&j| inside(j) && rank[j] < rank[k]).collect();
            let admit = rank[k] == 0
                || earlier.iter().all(|&j| rho.get(k, j).abs() < 1.0 - w[k].powi(rel.order()));
            admit == inside(k)
        });
        if consistent {
            let mut s: Vec<usize> = (0..p).filter(|&j| inside(j)).collect();
            s.sort_by_key(|&j| rank[j]);
            found.push(s);
        }
    }
    found
}

fn check_selection_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    for case in 0..1000 {
        let p = rng.random_range(1..=6);
        let w: Vec<f64> = (0..p)
            .map(|_| {
                if rng.random_bool(0.2) {
                    (rng.random_range(0..4) as f64) * 0.25
                } else {
                    rng.random_range(0.0..1.1)
                }
            })
            .collect();
        let rho = random_correlation(&mut rng, p);
        let wg = WithinGroupVariances {
            w: w.clone(),
            source: vscc_core::selection::MembershipKind::Hard,
        };
        let all = select_all(&wg, &rho);
        for rel in Relationship::ALL {
            let got = select_variables(&wg, &rho, rel);
            let want = consistent_subsets(&w, &rho, rel);
            if want.len() != 1 || want[0] != got.indices {
                return Err(format!("instance {case}, {rel}: got {:?}, oracle {want:?}", got.indices));
            }
            let tagged = all.subset_for(rel);
            if tagged.sorted_indices() != got.sorted_indices() {
                return Err(format!("instance {case}: select_all disagrees for {rel}"));
            }
            let lowest = Relationship::ALL
                .into_iter()
                .find(|r| select_variables(&wg, &rho, *r).sorted_indices() == got.sorted_indices())
                .expect("rel itself matches");
            if tagged.origin != vscc_core::SubsetOrigin::Vscc(lowest) {
                return Err(format!("instance {case}: {rel} tagged {} not {lowest}", tagged.origin));
            }
        }
    }
    Ok("greedy selection equals the exhaustive consistency oracle on 1000 instances (p <= 6)".into())
}

fn fixtures() -> Vec<(String, Dataset)> {
    let mut out = Vec::new();
    for (file, label) in [("wine.csv", "Type"), ("crabs.csv", "Group")] {
        if let Ok(ing) = ingest_csv(&data_dir().join(file), &[label]) {
            out.push((file.to_string(), standardize(&ing.dataset).expect("no constant column")));
        }
    }
    let inst = generate(&SimSpec {
        groups: 3,
        n_per_group: (40, 60),
        p_signal: 3,
        p_noise: 2,
        separation: 0.6,
        seed: 5,
    })
    .expect("valid spec");
    out.push(("simulated".to_string(), standardize(&inst.dataset).expect("no constant column")));
    out
}

fn check_em_monotone() -> Result<String, String> {
    let cfg = FitConfig {
        n_restarts: 2,
        ..FitConfig::default()
    };
    let mut fits = 0;
    let mut degenerate = 0;
    for (name, ds) in fixtures() {
        for model in CovarianceModel::ALL {
            for g in 1..=4 {
                match fit_em(&ds, g, model, &cfg) {
                    Ok(fit) => {
                        fits += 1;
                        for pair in fit.loglik_trace.windows(2) {
                            if pair[1] < pair[0] - 1e-9 * pair[0].abs().max(1.0) {
                                return Err(format!("{name} {model} G={g}: log likelihood fell {} -> {}", pair[0], pair[1]));
                            }
                        }
                    }
                    Err(_) => degenerate += 1,
                }
            }
        }
    }
    Ok(format!("{fits} fits with non-decreasing log likelihood ({degenerate} degenerate fits skipped)"))
}

fn ari_by_pairs(a: &[usize], b: &[usize]) -> Option<f64> {
    let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let denom = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    (denom != 0.0).then(|| 2.0 * (ss * dd - sd * ds) / denom)
}

fn check_ari_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for case in 0..1000 {
        let n = rng.random_range(2..=50);
        let (ga, gb) = (rng.random_range(1..=n.min(6)), rng.random_range(1..=n.min(6)));
        let a = random_partition(&mut rng, n, ga);
        let b = random_partition(&mut rng, n, gb);
        let got = adjusted_rand_index(&a, &b).map_err(|e| e.to_string())?;
        if let Some(want) = ari_by_pairs(a.labels(), b.labels()) {
            if (got - want).abs() > 1e-12 {
                return Err(format!("instance {case}: {got} vs pair count {want}"));
            }
        }
    }
    Ok("ARI equals pair enumeration on 1000 instances (n <= 50)".into())
}

fn check_uncertainty_bounds() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    for case in 0..1000 {
        let n = rng.random_range(1..40);
        let g = rng.random_range(1..=6);
        let soft = random_soft(&mut rng, n, g);
        let u = uncertainty(&soft);
        let upper = n as f64 * (1.0 - 1.0 / g as f64);
        if !(0.0..=upper + 1e-9).contains(&u) {
            return Err(format!("instance {case}: uncertainty {u} outside [0, {upper}]"));
        }
        if g == 1 && u != 0.0 {
            return Err(format!("instance {case}: one group but uncertainty {u}"));
        }
    }
    Ok("0 <= uncertainty <= n(1 - 1/G) on 1000 instances, exactly 0 for G = 1".into())
}

fn check_standardize_idempotent() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    for case in 0..1000 {
        let n = rng.random_range(3..40);
        let p = rng.random_range(1..6);
        let ds = random_dataset(&mut rng, n, p);
        let once = standardize(&ds).map_err(|e| e.to_string())?;
        let twice = standardize(&once).map_err(|e| e.to_string())?;
        let gap = (once.values() - twice.values()).amax();
        if gap > 1e-12 {
            return Err(format!("instance {case}: standardizing twice moved entries by {gap}"));
        }
    }
    Ok("standardize is idempotent to 1e-12 on 1000 instances".into())
}

fn check_determinism() -> Result<String, String> {
    let inst = generate(&SimSpec {
        groups: 3,
        n_per_group: (40, 50),
        p_signal: 3,
        p_noise: 3,
        separation: 0.8,
        seed: 11,
    })
    .map_err(|e| e.to_string())?;
    let cfg = FitConfig {
        g_max: 5,
        n_restarts: 3,
        ..FitConfig::default()
    }
    .with_seed(4);
    let a = run_clustering(&inst.dataset, &cfg, VsccOptions::default()).map_err(|e| e.to_string())?;
    let b = run_clustering(&inst.dataset, &cfg, VsccOptions::default()).map_err(|e| e.to_string())?;
    let same = a.chosen == b.chosen
        && a.selection == b.selection
        && a.init_fit == b.init_fit
        && a.candidates.len() == b.candidates.len()
        && a.candidates.iter().zip(&b.candidates).all(|(x, y)| {
            x.subset == y.subset && x.fit == y.fit && x.uncertainty.map(f64::to_bits) == y.uncertainty.map(f64::to_bits)
        });
    if !same {
        return Err("two clustering runs with the same seed differ".into());
    }
    let spec = SimSpec {
        groups: 2,
        n_per_group: (30, 40),
        p_signal: 2,
        p_noise: 2,
        separation: 0.8,
        seed: 3,
    };
    let quick = FitConfig {
        g_max: 3,
        n_restarts: 2,
        ..FitConfig::default()
    };
    let pipeline = Pipeline::Vscc { include_full_set: true };
    let s1 = replicate_study(&spec, 3, pipeline, &quick).map_err(|e| e.to_string())?;
    let s2 = replicate_study(&spec, 3, pipeline, &quick).map_err(|e| e.to_string())?;
    let strip = |s: &vscc_core::StudySummary| -> Vec<(u64, String, usize)> {
        s.rows.iter().map(|r| (r.ari.to_bits(), r.relationship.clone(), r.n_vars_chosen)).collect()
    };
    if strip(&s1) != strip(&s2) {
        return Err("two simulation studies with the same seed differ".into());
    }
    Ok("clustering runs and simulation studies are bit-identical under a fixed seed".into())
}

fn check_motivating_example() -> Result<String, String> {
    let rho = CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.75, 0.75, 1.0])).map_err(|e| e.to_string())?;
    let run = |w2: f64| {
        let w = WithinGroupVariances {
            w: vec![0.05, w2],
            source: vscc_core::selection::MembershipKind::Hard,
        };
        select_variables(&w, &rho, Relationship::Linear).indices
    };
    let rejected = run(0.6);
    let accepted = run(0.2);
    let bounds = (threshold(Relationship::Linear, 0.6), threshold(Relationship::Linear, 0.2));
    if rejected == vec![0] && accepted == vec![0, 1] && (bounds.0 - 0.4).abs() < 1e-15 && (bounds.1 - 0.8).abs() < 1e-15 {
        Ok("linear bound rejects W = 0.6 at rho = 0.75 (bound 0.4) and accepts W = 0.2 (bound 0.8)".into())
    } else {
        Err(format!("W = 0.6 gave {rejected:?}, W = 0.2 gave {accepted:?}, bounds {bounds:?}"))
    }
}

type Check = (&'static str, fn() -> Result<String, String>);

fn criterion_7() -> Verdict {
    let checks: [Check; 8] = [
        ("W oracle", check_w_oracle),
        ("selection oracle", check_selection_oracle),
        ("EM monotonicity", check_em_monotone),
        ("ARI oracle", check_ari_oracle),
        ("uncertainty bounds", check_uncertainty_bounds),
        ("standardize idempotence", check_standardize_idempotent),
        ("determinism", check_determinism),
        ("motivating example", check_motivating_example),
    ];
    let mut pass = true;
    let mut failed = Vec::new();
    for (label, check) in checks {
        match check() {
            Ok(msg) => println!("    {label}: ok, {msg}"),
            Err(msg) => {
                println!("    {label}: FAILED, {msg}");
                pass = false;
                failed.push(label);
            }
        }
    }
    Verdict {
        id: 7,
        name: "property suites",
        pass,
        detail: if pass {
            "all 8 suites green".into()
        } else {
            format!("failing: {}", failed.join(", "))
        },
    }
}

fn simulated_no_harm(log: &mut NoHarmLog) {
    for seed in 0..10u64 {
        let spec = SimSpec {
            groups: 2 + (seed as usize % 3),
            n_per_group: (40, 60),
            p_signal: 3,
            p_noise: 3,
            separation: 0.3 + 0.07 * seed as f64,
            seed,
        };
        let Ok(inst) = generate(&spec) else { continue };
        let cfg = FitConfig {
            g_max: 5,
            n_restarts: 3,
            ..FitConfig::default()
        }
        .with_seed(seed);
        if let Ok(report) = run_clustering(&inst.dataset, &cfg, VsccOptions::default()) {
            log.record(format!("simulated seed {seed}"), &report);
        }
    }
}

fn criterion_8(log: &mut NoHarmLog) -> Verdict {
    let violations: Vec<&(String, f64, f64)> = log.entries.iter().filter(|(_, c, f)| c > f).collect();
    let pass = !log.entries.is_empty() && violations.is_empty();
    Verdict {
        id: 8,
        name: "do no harm",
        pass,
        detail: match violations.first() {
            Some((ctx, c, f)) => format!("{ctx}: chosen uncertainty {c} exceeds full set {f}"),
            None => format!("chosen <= full-set uncertainty in all {} runs", log.entries.len()),
        },
    }
}

fn main() {
    let selected: Option<Vec<u8>> = std::env::var("VSCC_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |id: u8| selected.as_ref().is_none_or(|s| s.contains(&id));
    let mut log = NoHarmLog::default();
    let mut verdicts = Vec::new();
    let mut step = |id: u8, f: &mut dyn FnMut(&mut NoHarmLog) -> Verdict| {
        if wanted(id) {
            let start = Instant::now();
            let v = f(&mut log);
            println!(
                "{} criterion {} ({}): {} [{:.1}s]",
                if v.pass { "PASS" } else { "FAIL" },
                v.id,
                v.name,
                v.detail,
                start.elapsed().as_secs_f64()
            );
            verdicts.push(v);
        }
    };
    step(1, &mut criterion_1);
    step(2, &mut criterion_2);
    step(3, &mut criterion_3);
    step(4, &mut criterion_4);
    step(5, &mut |_| criterion_5());
    step(6, &mut |_| criterion_6());
    step(7, &mut |_| criterion_7());
    step(8, &mut |log| {
        simulated_no_harm(log);
        criterion_8(log)
    });
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} passed, {} failed", verdicts.len() - failed, failed);
    if failed > 0 && std::env::var_os("VSCC_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
