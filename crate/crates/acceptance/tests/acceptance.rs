//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sturm_metric::cli;
use sturm_metric::forge::{
    canned_incompatible, gen_dressed, gen_hermitian_pencil, DressedModel, DEFAULT_CONDITION_CAP,
};
use sturm_metric::liouville::{refinement_study, LiouvilleSetup, NamedMap, Potential};
use sturm_metric::matrix::scaled_difference;
use sturm_metric::metric::{
    build_metric_double, build_metric_single, compute_m_forms, dress, mode_alignment,
    truncate_scan, unit_weights, verify_metric, MetricCandidate, MetricReport, Tolerances,
};
use sturm_metric::pencil::{
    consistency_report, solve_pencil, BiorthogonalSystem, SturmianPencil, REALITY_TOL,
};
use sturm_metric::ComplexMatrix;

const SIZES: [usize; 4] = [4, 8, 16, 32];
const SEEDS: u64 = 20;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

struct Solved {
    model: DressedModel,
    sys: BiorthogonalSystem,
    single: MetricCandidate,
    report: MetricReport,
}

struct Suite {
    dressed: Vec<Solved>,
    elapsed: Duration,
}

fn build_suite(tol: &Tolerances) -> Suite {
    let started = Instant::now();
    let mut dressed = Vec::new();
    for n in SIZES {
        for seed in 0..SEEDS {
            let model = gen_dressed(n, seed, DEFAULT_CONDITION_CAP).expect("dressed model");
            let sys = solve_pencil(&model.pencil, REALITY_TOL).expect("solvable");
            let single = build_metric_single(&sys, &unit_weights(n)).expect("single series");
            let report = verify_metric(&model.pencil, &single, tol).expect("verify");
            dressed.push(Solved {
                model,
                sys,
                single,
                report,
            });
        }
    }
    Suite {
        dressed,
        elapsed: started.elapsed(),
    }
}

fn worst<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().copied().fold(0.0, f64::max)
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["sturm-metric"];
    full.extend_from_slice(args);
    cli::run(full)
}

fn single_series_correctness(suite: &Suite) -> Outcome {
    let r = &suite.dressed;
    let herm = worst(r.iter().map(|s| &s.report.hermiticity_residual));
    let ih = worst(r.iter().map(|s| &s.report.intertwine_h));
    let iw = worst(r.iter().map(|s| &s.report.intertwine_w));
    let positive = r
        .iter()
        .filter(|s| s.report.verdict.theta_positive && s.report.verdict.theta_w_positive)
        .count();
    let secs = suite.elapsed.as_secs_f64();
    outcome(
        herm <= 1e-9 && ih <= 1e-9 && iw <= 1e-9 && positive == r.len() && secs < 5.0,
        format!(
            "{} models: worst hermiticity {herm:.2e}, intertwine H {ih:.2e}, W {iw:.2e}; positive {positive}/{}; {secs:.2} s",
            r.len(),
            r.len()
        ),
    )
}

fn hermiticity_claim(suite: &Suite, tol: &Tolerances, dir: &Path) -> Outcome {
    let herm = worst(suite.dressed.iter().map(|s| &s.report.hermiticity_residual));
    let p = canned_incompatible();
    let sys = solve_pencil(&p, REALITY_TOL).expect("canned pair solves");
    let cand = build_metric_single(&sys, &unit_weights(2)).expect("single series");
    let canned = verify_metric(&p, &cand, tol)
        .expect("verify")
        .hermiticity_residual;
    let model = dir.join("incompatible.json");
    let m = model.to_str().unwrap();
    let forged = run_cli(&["forge", "incompatible", "--out", m]);
    let code = run_cli(&[
        "metric",
        m,
        "--out",
        dir.join("incompatible.report.json").to_str().unwrap(),
    ]);
    outcome(
        herm <= 1e-9 && canned > 0.1 && forged == 0 && code == 1,
        format!("suite worst {herm:.2e}; incompatible pair {canned:.3}, metric exit code {code}"),
    )
}

fn double_series_consistency(suite: &Suite) -> Outcome {
    let mut theta_gap: f64 = 0.0;
    let mut m_gap: f64 = 0.0;
    for s in &suite.dressed {
        let forms = compute_m_forms(&s.sys, &s.model.pencil).expect("M forms");
        m_gap = m_gap.max(forms.disagreement());
        let double = build_metric_double(&s.sys, &forms.pairing_form).expect("double series");
        theta_gap = theta_gap.max(scaled_difference(
            &double.theta,
            &s.single.theta,
            s.single.theta.frobenius_norm(),
        ));
    }
    outcome(
        theta_gap <= 1e-9 && m_gap <= 1e-10,
        format!("Theta double vs single {theta_gap:.2e}; M forms {m_gap:.2e}"),
    )
}

fn hermitian_pencils() -> Vec<SturmianPencil> {
    let sizes = [2, 4, 8, 16];
    (0..SEEDS)
        .map(|seed| {
            gen_hermitian_pencil(sizes[seed as usize % sizes.len()], seed)
                .expect("hermitian pencil")
        })
        .collect()
}

fn hermitian_collapse(pencils: &[SturmianPencil]) -> Outcome {
    let mut gap: f64 = 0.0;
    let mut sturmian = 0;
    for p in pencils {
        let n = p.n();
        let identity = ComplexMatrix::identity(n);
        if p.w != identity {
            sturmian += 1;
        }
        let sys = solve_pencil(p, REALITY_TOL).expect("hermitian pencil solves");
        let theta = build_metric_single(&sys, &unit_weights(n))
            .expect("single series")
            .theta;
        gap = gap.max((&theta - &identity).frobenius_norm());
    }
    outcome(
        gap <= 1e-10 && sturmian > 0,
        format!(
            "{} pencils ({sturmian} with W != I): max ||Theta - I||_F {gap:.2e}",
            pencils.len()
        ),
    )
}

fn completeness(suite: &Suite, pencils: &[SturmianPencil]) -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut count = 0;
    for s in &suite.dressed {
        worst_res = worst_res.max(
            consistency_report(&s.sys, &s.model.pencil)
                .expect("report")
                .worst(),
        );
        count += 1;
    }
    for p in pencils {
        let sys = solve_pencil(p, REALITY_TOL).expect("solves");
        worst_res = worst_res.max(consistency_report(&sys, p).expect("report").worst());
        count += 1;
    }
    outcome(
        worst_res <= 1e-9,
        format!("{count} pencils: worst residual {worst_res:.2e}"),
    )
}

fn dressing_isospectrality(suite: &Suite) -> Outcome {
    let mut herm: f64 = 0.0;
    let mut spectrum_defect: f64 = 0.0;
    for s in &suite.dressed {
        let d = dress(&s.model.pencil, &s.single).expect("dressing");
        herm = herm.max(d.h_residual).max(d.w_residual);
        spectrum_defect = spectrum_defect.max(d.isospectrality_defect(&s.sys.lambdas));
    }
    outcome(
        herm <= 1e-9 && spectrum_defect <= 1e-9,
        format!("worst h/w hermiticity {herm:.2e}; spectrum defect {spectrum_defect:.2e}"),
    )
}

fn truncation(tol: &Tolerances, dir: &Path) -> Outcome {
    let n = 16;
    let model = gen_dressed(n, 0, DEFAULT_CONDITION_CAP).expect("model");
    let sys = solve_pencil(&model.pencil, REALITY_TOL).expect("solves");
    let weights = unit_weights(n);
    let scan = truncate_scan(&sys, &model.pencil, &weights, tol).expect("scan");
    let full = verify_metric(
        &model.pencil,
        &build_metric_single(&sys, &weights).unwrap(),
        tol,
    )
    .unwrap();
    let last = &scan[n].report;
    let prev = &scan[n - 1].report;
    let coincide = last.hermiticity_residual == full.hermiticity_residual
        && last.intertwine_h == full.intertwine_h
        && last.intertwine_w == full.intertwine_w
        && last.min_eig_theta == full.min_eig_theta;
    let larger = prev.intertwine_h > last.intertwine_h && prev.intertwine_w > last.intertwine_w;

    let model_path = dir.join("trunc16.json");
    let csv_path = dir.join("trunc16.csv");
    run_cli(&[
        "forge",
        "dressed",
        "--n",
        "16",
        "--seed",
        "0",
        "--out",
        model_path.to_str().unwrap(),
    ]);
    let started = Instant::now();
    let code = run_cli(&[
        "metric",
        model_path.to_str().unwrap(),
        "--method",
        "single",
        "--truncate",
        csv_path.to_str().unwrap(),
        "--out",
        dir.join("trunc16.report.json").to_str().unwrap(),
    ]);
    let secs = started.elapsed().as_secs_f64();
    let rows = fs::read_to_string(&csv_path)
        .map(|s| s.lines().count().saturating_sub(1))
        .unwrap_or(0);
    outcome(
        coincide && larger && code == 0 && rows == n + 1 && secs < 1.0,
        format!(
            "K=n matches full: {coincide}; K=n-1 intertwine H {:.2e} W {:.2e} vs {:.2e} {:.2e}; CSV rows {rows}; {secs:.3} s",
            prev.intertwine_h, prev.intertwine_w, last.intertwine_h, last.intertwine_w
        ),
    )
}

fn liouville_isospectrality() -> Outcome {
    let setup = LiouvilleSetup {
        potential: Potential::Harmonic,
        map: NamedMap::Exp,
        r_domain: (0.02, 8.0),
    };
    let started = Instant::now();
    let study = match refinement_study(&setup, 4000, 3, 5e-3) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let secs = started.elapsed().as_secs_f64();
    let ratios: Vec<String> = study
        .ratios
        .iter()
        .map(|r| r.map_or("exact".to_string(), |r| format!("{r:.2}")))
        .collect();
    outcome(
        study.coarse.passed && study.converges_by(2.0) && secs < 30.0,
        format!(
            "N=4000 max rel diff {:.2e}; N={} {:.2e}; ratios [{}]; {secs:.2} s",
            study.coarse.max_relative_difference,
            study.fine_points,
            study.fine.max_relative_difference,
            ratios.join(", ")
        ),
    )
}

fn metric_family(suite: &Suite, tol: &Tolerances) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut total = 0;
    let mut passing = 0;
    let mut best_herm = f64::INFINITY;
    let mut aligned = 0;
    let mut worst_align: f64 = 0.0;
    let models: Vec<&Solved> = suite
        .dressed
        .iter()
        .filter(|s| s.model.pencil.n() == 8)
        .collect();
    for s in &models {
        for _ in 0..10 {
            let d: Vec<f64> = (0..8).map(|_| rng.gen_range(0.1..10.0)).collect();
            let cand = build_metric_single(&s.sys, &d).expect("weighted series");
            let report = verify_metric(&s.model.pencil, &cand, tol).expect("verify");
            total += 1;
            if report.passed() {
                passing += 1;
            } else {
                best_herm = best_herm.min(report.hermiticity_residual.max(report.intertwine_h));
            }
        }
        let align = mode_alignment(&s.model.theta_true, &s.sys).expect("alignment");
        worst_align = worst_align.max(worst(align.iter().map(|a| &a.residual)));
        if align.iter().all(|a| a.positive_parallel(1e-8)) {
            aligned += 1;
        }
    }
    let family_ok = passing == total;
    let align_ok = aligned == models.len();
    let mut detail = format!("weighted Theta_d passing {passing}/{total}");
    if !family_ok {
        detail.push_str(&format!(" (smallest failing residual {best_herm:.2e})"));
    }
    detail.push_str(&format!(
        "; Theta_true alignment {aligned}/{} models, worst {worst_align:.2e}",
        models.len()
    ));
    outcome(family_ok && align_ok, detail)
}

fn determinism(dir: &Path) -> Outcome {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec![
            "forge".into(),
            "dressed".into(),
            "--n".into(),
            "8".into(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            p("det.json"),
        ],
        vec![
            "forge".into(),
            "hermitian".into(),
            "--n".into(),
            "4".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            p("herm.json"),
        ],
        vec![
            "forge".into(),
            "incompatible".into(),
            "--out".into(),
            p("inc.json"),
        ],
        vec![
            "metric".into(),
            p("det.json"),
            "--truncate".into(),
            p("det.csv"),
            "--out".into(),
            p("det.report.json"),
        ],
        vec![
            "metric".into(),
            p("herm.json"),
            "--out".into(),
            p("herm.report.json"),
        ],
    ];
    let outputs = [
        "det.json",
        "det.truth.json",
        "herm.json",
        "inc.json",
        "det.csv",
        "det.report.json",
        "herm.report.json",
    ];
    let snapshot = || -> Vec<Vec<u8>> {
        for args in &runs {
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            run_cli(&refs);
        }
        outputs
            .iter()
            .map(|f| fs::read(dir.join(f)).unwrap_or_default())
            .collect()
    };
    let first = snapshot();
    let second = snapshot();
    let same = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a == b && !a.is_empty())
        .count();
    outcome(
        same == outputs.len(),
        format!(
            "{same}/{} output files byte-identical across reruns",
            outputs.len()
        ),
    )
}

fn main() {
    let tol = Tolerances::default();
    let dir = tempfile::tempdir().expect("temp dir");
    let suite = build_suite(&tol);
    let herm = hermitian_pencils();

    let results: Vec<(&str, Outcome)> = vec![
        (
            "single-series metric correctness",
            single_series_correctness(&suite),
        ),
        (
            "Hermiticity of Theta",
            hermiticity_claim(&suite, &tol, dir.path()),
        ),
        (
            "double-series consistency",
            double_series_consistency(&suite),
        ),
        ("Hermitian collapse", hermitian_collapse(&herm)),
        (
            "completeness and spectral reconstruction",
            completeness(&suite, &herm),
        ),
        ("dressing isospectrality", dressing_isospectrality(&suite)),
        ("truncation behaviour", truncation(&tol, dir.path())),
        ("Liouville isospectrality", liouville_isospectrality()),
        ("metric non-uniqueness family", metric_family(&suite, &tol)),
        ("determinism", determinism(dir.path())),
    ];

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
