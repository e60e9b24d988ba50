//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use priorimax::core::es::Hooks;
use priorimax::core::extraction::{
    bartlett_sphericity, correlation_from_data, principal_axis_factor, PafConfig,
};
use priorimax::core::index::{
    index_from_points, kendall_tau_mapped, loading_index, theta_from_slope, IndexComponents, PairSet,
};
use priorimax::core::linalg::{max_abs_diff, orthogonality_residual};
use priorimax::core::model::{CorrelationMatrix, FactorModel, LoadingMatrix};
use priorimax::core::priors::{generate_grouper_prior, prior_from_semantic, PriorMatrix};
use priorimax::core::rotation::{
    cayley_rotation, classical_rotate, priorimax_rotate, GpaConfig, OptimizerConfig, RotationMethod,
    RotationParams, SearchMode,
};
use priorimax::core::similarity::{loading_similarity_from_squares, semantic_matrix};
use priorimax::core::es::EsConfig;
use priorimax::core::DMatrix;
use rand::Rng;

use common::*;

// D_f bounds
const DF_ROWS: usize = 100_000;
const DF_RUNTIME_SECS: f64 = 10.0;
// Kendall oracle
const KENDALL_SETS: usize = 1_000;
const KENDALL_MAX_LEN: usize = 50;
const KENDALL_RUNTIME_SECS: f64 = 5.0;
// components
const V_FORMULA_TOL: f64 = 1e-12;
// invariance
const INVARIANCE_TOL: f64 = 1e-12;
// Cayley
const CAYLEY_DRAWS: usize = 10_000;
const CAYLEY_ORTHO_TOL: f64 = 1e-10;
const CAYLEY_QUARTER_TOL: f64 = 1e-12;
// T = 2 grid oracle
const GRID_STEP_DEG: f64 = 0.05;
const GRID_MAX_EVALS: usize = 50_000;
const GRID_TOL: f64 = 1e-3;
const GRID_RUNTIME_SECS: f64 = 60.0;
// dominance
const DOMINANCE_MAX_EVALS: usize = 100_000;
const DOMINANCE_TOL: f64 = 1e-6;
const DOMINANCE_RUNTIME_SECS: f64 = 300.0;
// planted recovery
const PLANTED_TOL: f64 = 0.01;
// reduced vs faithful
const MODE_TOL: f64 = 2e-3;
// extraction
const PAF_LOADING_TOL: f64 = 1e-4;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v_of(lm: &LoadingMatrix, prior: &PriorMatrix) -> f64 {
    loading_index(lm, prior).expect("index defined on fixture").v
}

fn rotated(lm: &LoadingMatrix, r: &DMatrix<f64>) -> LoadingMatrix {
    LoadingMatrix::new(lm.values() * r, lm.variances().to_vec(), lm.variable_names().to_vec()).unwrap()
}

fn model_of(l: DMatrix<f64>) -> FactorModel {
    let lm = LoadingMatrix::standardized(l).unwrap();
    let uniq = lm.communalities().iter().map(|h| (1.0 - h).max(0.0)).collect();
    FactorModel::new(lm, uniq).unwrap()
}

fn run_priorimax(fm: &FactorModel, prior: &PriorMatrix, max_evals: usize, seed: u64, mode: SearchMode) -> f64 {
    let cfg = OptimizerConfig { es: EsConfig { max_evals, seed, ..Default::default() }, mode, skew_bound: 1.0 };
    let (_, out) = priorimax_rotate(fm, prior, &cfg, &mut Hooks::default()).expect("priorimax runs");
    out.components.v
}

fn df_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut checked = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    while checked < DF_ROWS {
        let t = rng.random_range(1..=8usize);
        let m = 1000.max(t);
        let variances: Vec<f64> = (0..m).map(|_| rng.random_range(0.25..4.0)).collect();
        let mut l = DMatrix::zeros(m, t);
        for i in 0..m {
            let dir: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            // occasionally put all variance on one factor
            let radius = if rng.random_bool(0.05) { 1.0 } else { rng.random::<f64>() };
            for k in 0..t {
                l[(i, k)] = dir[k] / norm * radius * variances[i].sqrt();
            }
        }
        let lm = LoadingMatrix::new(l, variances, priorimax::core::model::default_names(m)).map_err(|e| e.to_string())?;
        let squares = lm.standardized_squared_loadings();
        for i in 0..m {
            let j = (i + 1) % m;
            let d = loading_similarity_from_squares(&squares, i, j);
            ensure((0.0..=1.0).contains(&d), || format!("D_f = {d} outside [0, 1]"))?;
            ensure(loading_similarity_from_squares(&squares, i, i) == 1.0, || "D_f(i, i) != 1".into())?;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        checked += m;
    }
    let unit = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let d = loading_similarity_from_squares(&unit, 0, 1);
    ensure(d == 0.0, || format!("(1,0)/(0,1) gives {d}, expected 0"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < DF_RUNTIME_SECS, || format!("took {secs:.2}s"))?;
    Ok(format!("{checked} rows, D_f range [{lo:.4}, {hi:.4}], attained 0 exactly, {secs:.2}s"))
}

/// Brute-force mapped tau-b, written independently of the library.
fn brute_mapped_tau(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as u64;
    let total = n * (n - 1) / 2;
    let (mut nc, mut nd, mut n1, mut n2) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let dx = xs[i].partial_cmp(&xs[j]).unwrap();
            let dy = ys[i].partial_cmp(&ys[j]).unwrap();
            if dx.is_eq() {
                n1 += 1;
            }
            if dy.is_eq() {
                n2 += 1;
            }
            if dx.is_ne() && dy.is_ne() {
                if dx == dy {
                    nc += 1;
                } else {
                    nd += 1;
                }
            }
        }
    }
    if total == n1 || total == n2 {
        return None;
    }
    let tau = (nc as f64 - nd as f64) / (2.0 * ((total - n1) as f64).sqrt() * ((total - n2) as f64).sqrt()) + 0.5;
    Some(tau.clamp(0.0, 1.0))
}

fn kendall_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(202);
    let mut undefined = 0;
    for set in 0..KENDALL_SETS {
        let n = rng.random_range(2..=KENDALL_MAX_LEN);
        let levels_x = rng.random_range(1..=6u32);
        let continuous_y = rng.random_bool(0.3);
        let points: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x = rng.random_range(0..levels_x) as f64 / 4.0;
                let y = if continuous_y { rng.random::<f64>() } else { rng.random_range(0..5u32) as f64 / 5.0 };
                (x, y)
            })
            .collect();
        let pairs = PairSet::from_points(&points).unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        match (kendall_tau_mapped(&pairs), brute_mapped_tau(&xs, &ys)) {
            (Ok(a), Some(b)) => ensure(a == b, || format!("set {set}: library {a} vs brute force {b}"))?,
            (Err(_), None) => undefined += 1,
            (a, b) => return Err(format!("set {set}: library {a:?} vs brute force {b:?}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < KENDALL_RUNTIME_SECS, || format!("took {secs:.2}s"))?;
    Ok(format!("{KENDALL_SETS} sets bit-identical ({undefined} all-tied on both sides), {secs:.2}s"))
}

fn random_fixture(rng: &mut rand_chacha::ChaCha8Rng) -> (LoadingMatrix, PriorMatrix) {
    let m = rng.random_range(6..=20usize);
    let t = rng.random_range(1..=5usize).min(m - 1);
    let mut l = DMatrix::zeros(m, t);
    for i in 0..m {
        let dir: Vec<f64> = (0..t).map(|_| normal(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = rng.random_range(0.2..0.95);
        for k in 0..t {
            l[(i, k)] = dir[k] / norm * radius;
        }
    }
    let mut c = vec![1.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let v = rng.random::<f64>();
            c[i * m + j] = v;
            c[j * m + i] = v;
        }
    }
    (LoadingMatrix::standardized(l).unwrap(), PriorMatrix::from_dense(m, &c).unwrap())
}

fn component_checks() -> Outcome {
    let exact = [(0.0, 0.5), (1.0, 0.75), (-1.0, 0.25)];
    for (slope, expected) in exact {
        let got = theta_from_slope(slope);
        ensure(got == expected, || format!("theta({slope}) = {got}, expected {expected}"))?;
    }
    let mut rng = rng(303);
    let mut max_v: f64 = 0.0;
    for k in 0..500 {
        let (lm, prior) = random_fixture(&mut rng);
        let c: IndexComponents = loading_index(&lm, &prior).map_err(|e| format!("fixture {k}: {e}"))?;
        let err = (c.v - (c.tau * c.theta).sqrt()).abs();
        ensure(err <= V_FORMULA_TOL, || format!("fixture {k}: |v - sqrt(tau theta)| = {err:e}"))?;
        ensure((0.0..1.0).contains(&c.v), || format!("fixture {k}: V = {} outside [0, 1)", c.v))?;
        max_v = max_v.max(c.v);
    }
    Ok(format!("theta exact at -1/0/1; 500 random fixtures satisfy v = sqrt(tau theta) and V in [0,1) (max {max_v:.4})"))
}

fn invariance_suite() -> Outcome {
    let mut rng = rng(404);
    let mut worst: f64 = 0.0;
    for k in 0..300 {
        let (lm, prior) = random_fixture(&mut rng);
        let t = lm.factor_count();
        let base = v_of(&lm, &prior);
        let mut perm: Vec<usize> = (0..t).collect();
        for i in (1..t).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut p = DMatrix::zeros(t, t);
        for (from, &to) in perm.iter().enumerate() {
            p[(from, to)] = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        }
        let moved = v_of(&rotated(&lm, &p), &prior);
        worst = worst.max((moved - base).abs());
        ensure((moved - base).abs() <= INVARIANCE_TOL, || format!("fixture {k}: drift {:e}", (moved - base).abs()))?;

        // null out a random subset of pairs; the restricted full prior must agree exactly
        let m = prior.size();
        let mut rows: Vec<Vec<Option<f64>>> = prior.rows().map(<[_]>::to_vec).collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let squares = lm.standardized_squared_loadings();
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random_bool(0.4) {
                    rows[i][j] = None;
                    rows[j][i] = None;
                } else {
                    xs.push(prior.get(i, j).unwrap());
                    ys.push(loading_similarity_from_squares(&squares, i, j));
                }
            }
        }
        if xs.len() < 2 {
            continue;
        }
        let partial = PriorMatrix::from_rows(rows).unwrap();
        let via_partial = loading_index(&lm, &partial).map(|c| c.v);
        let via_full = index_from_points(&xs, &ys).map(|c| c.v);
        ensure(via_partial == via_full, || format!("fixture {k}: partial {via_partial:?} vs restricted {via_full:?}"))?;
    }
    Ok(format!("300 models: max drift under permutation/sign flips {worst:e}; partial prior equals restricted full prior exactly"))
}

fn cayley_suite() -> Outcome {
    let mut rng = rng(505);
    let mut worst: f64 = 0.0;
    for k in 0..CAYLEY_DRAWS {
        let t = rng.random_range(2..=8usize);
        let params = RotationParams {
            skew: (0..t * (t - 1) / 2).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            signature: (0..t).map(|_| if rng.random_bool(0.5) { -1.0 } else { 1.0 }).collect(),
        };
        let r = cayley_rotation(&params).map_err(|e| format!("draw {k}: {e}"))?;
        let res = orthogonality_residual(&r);
        worst = worst.max(res);
        ensure(res <= CAYLEY_ORTHO_TOL, || format!("draw {k} (T={t}): residual {res:e}"))?;
    }
    for t in 2..=8 {
        let r = cayley_rotation(&RotationParams::identity(t)).unwrap();
        ensure(r == DMatrix::identity(t, t), || format!("S=0, D=I is not exactly I for T={t}"))?;
    }
    let q = cayley_rotation(&RotationParams { skew: vec![1.0], signature: vec![1.0, 1.0] }).unwrap();
    let target = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let d = max_abs_diff(&q, &target);
    ensure(d <= CAYLEY_QUARTER_TOL, || format!("T=2, s=1 off by {d:e}"))?;
    Ok(format!("{CAYLEY_DRAWS} draws, max |R'R - I| = {worst:e}; identity exact; quarter turn within {d:e}"))
}

fn angle_rotation(deg: f64) -> DMatrix<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

struct Fixture {
    model: FactorModel,
    prior: PriorMatrix,
}

fn grid_fixture() -> Fixture {
    let mut rng = rng(606);
    let blocks = [5, 5];
    let l = block_loadings(&blocks, (0.6, 0.85), 0.12, &mut rng) * angle_rotation(33.0);
    Fixture { model: model_of(l), prior: generate_grouper_prior(10, &block_groups(&blocks)).unwrap() }
}

fn grid_oracle(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let lm = fx.model.unrotated();
    let steps = (180.0 / GRID_STEP_DEG).round() as usize;
    let (mut best, mut best_deg) = (f64::NEG_INFINITY, 0.0);
    for k in 0..steps {
        let deg = k as f64 * GRID_STEP_DEG;
        let v = v_of(&rotated(lm, &angle_rotation(deg)), &fx.prior);
        if v > best {
            best = v;
            best_deg = deg;
        }
    }
    let got = run_priorimax(&fx.model, &fx.prior, GRID_MAX_EVALS, 11, SearchMode::Reduced);
    let secs = start.elapsed().as_secs_f64();
    ensure(got >= best - GRID_TOL, || format!("priorimax V = {got:.6} < V* = {best:.6} at {best_deg} deg"))?;
    ensure(secs < GRID_RUNTIME_SECS, || format!("took {secs:.2}s"))?;
    Ok(format!("V* = {best:.6} at {best_deg:.2} deg over {steps} angles; priorimax V = {got:.6} ({GRID_MAX_EVALS} evals, {secs:.2}s)"))
}

fn dominance_fixture() -> Fixture {
    let mut rng = rng(707);
    let blocks = [9, 9, 9, 9];
    let l = block_loadings(&blocks, (0.5, 0.8), 0.2, &mut rng);
    let data = simulate(&l, 600, &mut rng);
    let corr = correlation_from_data(&data).unwrap();
    let model = principal_axis_factor(&corr, 4, PafConfig::default()).unwrap().model;
    let emb = topic_embeddings(&blocks, 64, 1.2, &mut rng);
    let prior = prior_from_semantic(&semantic_matrix(&emb).unwrap()).unwrap();
    Fixture { model, prior }
}

fn dominance(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let mut classical = Vec::new();
    for method in RotationMethod::CLASSICAL {
        let m = classical_rotate(&fx.model, method, GpaConfig::default()).map_err(|e| e.to_string())?;
        classical.push((method.name(), v_of(m.loadings(), &fx.prior)));
    }
    let best = classical.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let got = run_priorimax(&fx.model, &fx.prior, DOMINANCE_MAX_EVALS, 3, SearchMode::Reduced);
    let secs = start.elapsed().as_secs_f64();
    let listing: Vec<String> = classical.iter().map(|(n, v)| format!("{n} {v:.4}")).collect();
    ensure(got >= best - DOMINANCE_TOL, || format!("priorimax {got:.6} below best classical {best:.6} ({})", listing.join(", ")))?;
    ensure(secs < DOMINANCE_RUNTIME_SECS, || format!("took {secs:.2}s"))?;
    Ok(format!("priorimax {got:.4} vs {} ({secs:.1}s)", listing.join(", ")))
}

struct Planted {
    fixture: Fixture,
    reference: f64,
    truth: f64,
}

fn planted_fixture() -> Planted {
    let mut rng = rng(808);
    let blocks = [4, 4, 4];
    let truth = block_loadings(&blocks, (0.6, 0.85), 0.1, &mut rng);
    let data = simulate(&truth, 800, &mut rng);
    let corr = correlation_from_data(&data).unwrap();
    let fitted = principal_axis_factor(&corr, 3, PafConfig::default()).unwrap().model;
    let r0 = random_orthogonal(3, &mut rng);
    let scrambled = fitted.unrotated().values() * &r0;
    let prior = generate_grouper_prior(12, &block_groups(&blocks)).unwrap();
    // the true structure as a feasible point: scrambled loadings aligned to it
    let align = procrustes(&scrambled, &truth);
    let reference = v_of(&LoadingMatrix::standardized(&scrambled * align).unwrap(), &prior);
    let truth_v = v_of(&LoadingMatrix::standardized(truth).unwrap(), &prior);
    Planted { fixture: Fixture { model: model_of(scrambled), prior }, reference, truth: truth_v }
}

fn planted_recovery(p: &Planted) -> Outcome {
    let got = run_priorimax(&p.fixture.model, &p.fixture.prior, 100_000, 5, SearchMode::Reduced);
    ensure(got >= p.reference - PLANTED_TOL, || format!("V = {got:.6} < aligned truth {:.6} - {PLANTED_TOL}", p.reference))?;
    Ok(format!(
        "V = {got:.4}; aligned true structure {:.4}; population structure {:.4}",
        p.reference, p.truth
    ))
}

fn mode_equivalence(fixtures: &[(&str, &Fixture, usize)]) -> Outcome {
    let mut parts = Vec::new();
    for (name, fx, evals) in fixtures {
        let reduced = run_priorimax(&fx.model, &fx.prior, *evals, 9, SearchMode::Reduced);
        let faithful = run_priorimax(&fx.model, &fx.prior, *evals, 9, SearchMode::Faithful);
        let gap = (reduced - faithful).abs();
        ensure(gap <= MODE_TOL, || format!("{name}: reduced {reduced:.6} vs faithful {faithful:.6}"))?;
        parts.push(format!("{name}: {reduced:.4}/{faithful:.4}"));
    }
    Ok(format!("reduced/faithful {}", parts.join(", ")))
}

fn extraction_sanity() -> Outcome {
    let mut r = DMatrix::from_element(4, 4, 0.64);
    r.fill_diagonal(1.0);
    let corr = CorrelationMatrix::new(r, 100).map_err(|e| e.to_string())?;
    let paf = principal_axis_factor(&corr, 1, PafConfig::default()).map_err(|e| e.to_string())?;
    let l = paf.model.loadings().values();
    let worst = l.iter().map(|x| (x - 0.8).abs()).fold(0.0, f64::max);
    ensure(worst <= PAF_LOADING_TOL, || format!("loadings {:?}", l.as_slice()))?;
    let b = bartlett_sphericity(&CorrelationMatrix::identity(5, 50)).map_err(|e| e.to_string())?;
    ensure(b.chi2 == 0.0 && b.p_value == 1.0, || format!("identity: chi2 {}, p {}", b.chi2, b.p_value))?;
    Ok(format!("PAF loadings within {worst:e} of 0.8; Bartlett(I) chi2 = 0, p = 1"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = rng(909);
    let blocks = [4, 4, 4];
    let data = simulate(&block_loadings(&blocks, (0.55, 0.8), 0.15, &mut rng), 300, &mut rng);
    let data_path = dir.path().join("data.csv");
    write_data_csv(&data_path, &data);
    let groups = dir.path().join("groups.json");
    std::fs::write(&groups, serde_json::to_string(&block_groups(&blocks)).unwrap()).unwrap();
    let prior = dir.path().join("prior.json");
    let bin = env!("CARGO_BIN_EXE_priorimax");
    let status = Command::new(bin)
        .current_dir(dir.path())
        .args(["prior", "grouper", "--size", "12", "--groups", "groups.json", "--out", "prior.json"])
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success() && prior.exists(), || "prior generation failed".into())?;
    let mut outputs = Vec::new();
    for (k, workers) in ["1", "1", "3", "8"].iter().enumerate() {
        let out = format!("model{k}.json");
        let o = Command::new(bin)
            .current_dir(dir.path())
            .args([
                "fit", "--data", "data.csv", "--factors", "3", "--rotation", "priorimax", "--prior", "prior.json",
                "--seed", "42", "--max-evals", "20000", "--workers", workers, "--out", &out,
            ])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || format!("fit failed: {}", String::from_utf8_lossy(&o.stderr)))?;
        outputs.push(std::fs::read(dir.path().join(&out)).map_err(|e| e.to_string())?);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    ensure(same, || "model JSON differs between runs or worker counts".into())?;
    Ok(format!("4 runs (workers 1, 1, 3, 8) produced identical {}-byte model JSON", outputs[0].len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match &outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => println!("FAIL  {name}: {detail}"),
        }
        results.push((name, outcome));
    };

    run("D_f bound suite", &mut df_bounds);
    run("Kendall oracle", &mut kendall_oracle);
    run("Component checks", &mut component_checks);
    run("Invariance suite", &mut invariance_suite);
    run("Cayley suite", &mut cayley_suite);
    let grid = grid_fixture();
    run("T=2 grid oracle", &mut || grid_oracle(&grid));
    let dom = dominance_fixture();
    run("Dominance over classical rotations", &mut || dominance(&dom));
    let planted = planted_fixture();
    run("Planted-structure recovery", &mut || planted_recovery(&planted));
    run("Mode equivalence", &mut || {
        mode_equivalence(&[("dominance", &dom, DOMINANCE_MAX_EVALS), ("planted", &planted.fixture, 100_000)])
    });
    run("Extraction sanity", &mut extraction_sanity);
    run("Determinism", &mut determinism);

    let failed = results.iter().filter(|(_, o)| o.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
