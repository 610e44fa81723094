use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use survnet::config::Config;
use survnet::data::{generate, Dataset, RiskKind, SyntheticSpec};
use survnet::error::Result;
use survnet::harness::{
    builtin_method, make_split, parse_report_csv, report_csv, run_protocol, summary_table, EvalReport, Method,
    MethodReport, PermutationResult, ProtocolOptions, RiskModel,
};
use survnet::hyperopt::{Dimension, OptimizerSettings, ParamSpace};

struct Constant;

impl RiskModel for Constant {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(vec![1.0; data.len()])
    }
}

struct ConstantMethod(ParamSpace);

impl Method for ConstantMethod {
    fn name(&self) -> &str {
        "constant"
    }
    fn space(&self) -> &ParamSpace {
        &self.0
    }
    fn fit(&self, _: &[f64], _: &Dataset, _: &Dataset, _: u64) -> Result<Box<dyn RiskModel>> {
        Ok(Box::new(Constant))
    }
}

/// Scores samples by the generator's own risk, looked up by id.
struct Truth(HashMap<String, f64>);

impl RiskModel for Truth {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(data.sample_ids().iter().map(|id| self.0[id]).collect())
    }
}

struct TruthMethod(ParamSpace, HashMap<String, f64>);

impl Method for TruthMethod {
    fn name(&self) -> &str {
        "truth"
    }
    fn space(&self) -> &ParamSpace {
        &self.0
    }
    fn fit(&self, _: &[f64], _: &Dataset, _: &Dataset, _: u64) -> Result<Box<dyn RiskModel>> {
        Ok(Box::new(Truth(self.1.clone())))
    }
}

/// Remembers every sample id and row count it is shown while fitting.
struct Sentinel {
    space: ParamSpace,
    seen: RefCell<HashSet<String>>,
    rows: RefCell<Vec<usize>>,
}

impl Method for Sentinel {
    fn name(&self) -> &str {
        "sentinel"
    }
    fn space(&self) -> &ParamSpace {
        &self.space
    }
    fn fit(&self, _: &[f64], train: &Dataset, validation: &Dataset, _: u64) -> Result<Box<dyn RiskModel>> {
        let mut seen = self.seen.borrow_mut();
        seen.extend(train.sample_ids().iter().cloned());
        seen.extend(validation.sample_ids().iter().cloned());
        self.rows.borrow_mut().push(train.len() + validation.len());
        Ok(Box::new(Constant))
    }
}

fn dummy_space() -> ParamSpace {
    ParamSpace::new(vec![Dimension::continuous("x", 0.0, 1.0, false)]).unwrap()
}

fn quick_options(permutations: usize) -> ProtocolOptions {
    ProtocolOptions {
        permutations,
        base_seed: 100,
        optimizer: OptimizerSettings {
            budget: 3,
            init_trials: 2,
            candidates: 64,
        },
        run_dir: None,
    }
}

fn small_data(kind: RiskKind, n: usize, signal: f64) -> (Dataset, Vec<f64>) {
    let d = generate(&SyntheticSpec {
        n,
        p: 6,
        sparsity: 3,
        risk_kind: kind,
        signal_scale: signal,
        seed: 8,
        ..SyntheticSpec::default()
    })
    .unwrap();
    (d.dataset, d.true_risk)
}

#[test]
fn splits_partition_every_index() {
    for n in 10..=40 {
        for seed in 0..5 {
            let plan = make_split(n, seed).unwrap();
            let mut all: Vec<usize> = plan
                .train
                .iter()
                .chain(&plan.validation)
                .chain(&plan.test)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>(), "n {n} seed {seed}");
            assert_eq!(plan.train.len(), n * 7 / 10);
        }
    }
    let plans: Vec<_> = (0..10).map(|s| make_split(50, s).unwrap()).collect();
    assert_eq!(plans[3], make_split(50, 3).unwrap());
    assert!(plans.windows(2).any(|w| w[0].train != w[1].train));
}

#[test]
fn constant_risk_scores_zero() {
    let (data, _) = small_data(RiskKind::Linear, 80, 2.0);
    let m = ConstantMethod(dummy_space());
    let report = run_protocol(&data, &[&m], &quick_options(3)).unwrap();
    let r = &report.methods[0];
    assert_eq!(r.test_cis(), vec![0.0; 3]);
    assert_eq!(r.mean(), Some(0.0));
}

#[test]
fn oracle_risk_is_nearly_perfect() {
    // a strong signal keeps exponential noise from scrambling the ordering
    let (data, truth) = small_data(RiskKind::Linear, 400, 20.0);
    let lookup = data.sample_ids().iter().cloned().zip(truth).collect();
    let m = TruthMethod(dummy_space(), lookup);
    let report = run_protocol(&data, &[&m], &quick_options(10)).unwrap();
    let mean = report.methods[0].mean().unwrap();
    assert!(mean >= 0.95, "{mean}");
}

#[test]
fn single_permutation_is_one_split() {
    let (data, _) = small_data(RiskKind::Linear, 60, 2.0);
    let m = ConstantMethod(dummy_space());
    let report = run_protocol(&data, &[&m], &quick_options(1)).unwrap();
    assert_eq!(report.methods[0].results.len(), 1);
    assert_eq!(report.methods[0].results[0].seed, 100);
    assert_eq!(report.methods[0].std(), None);
}

#[test]
fn tuning_never_sees_test_rows() {
    let (data, _) = small_data(RiskKind::Linear, 70, 2.0);
    let sentinel = Sentinel {
        space: dummy_space(),
        seen: RefCell::new(HashSet::new()),
        rows: RefCell::new(Vec::new()),
    };
    let options = quick_options(4);
    run_protocol(&data, &[&sentinel], &options).unwrap();
    assert!(sentinel.rows.borrow().iter().all(|&r| r == 49 + 11));
    let seen = sentinel.seen.borrow();
    // everything seen across permutations was a train or validation row somewhere,
    // and within one permutation no test row is shown
    for k in 0..4 {
        let plan = make_split(70, 100 + k).unwrap();
        let single = Sentinel {
            space: dummy_space(),
            seen: RefCell::new(HashSet::new()),
            rows: RefCell::new(Vec::new()),
        };
        let opts = ProtocolOptions {
            base_seed: 100 + k,
            ..quick_options(1)
        };
        run_protocol(&data, &[&single], &opts).unwrap();
        for &i in &plan.test {
            assert!(!single.seen.borrow().contains(&data.sample_ids()[i]));
        }
    }
    assert!(!seen.is_empty());
}

fn fake_report() -> EvalReport {
    let row = |k: usize, ci: f64| PermutationResult {
        permutation: k,
        seed: 7 + k as u64,
        outcome: Ok(ci),
        params: vec![("lambda".into(), 0.012_345_678_9), ("alpha".into(), 1.0 / 3.0)],
    };
    EvalReport {
        methods: vec![
            MethodReport {
                method: "coxnet".into(),
                results: vec![row(0, 0.61), row(1, 0.7000000000000001), row(2, 2.0 / 3.0)],
            },
            MethodReport {
                method: "nn-relu".into(),
                results: vec![
                    row(0, 0.72),
                    PermutationResult {
                        permutation: 1,
                        seed: 8,
                        outcome: Err("training diverged at epoch 3, \"quoted\"".into()),
                        params: vec![],
                    },
                    row(2, 0.68),
                ],
            },
        ],
    }
}

#[test]
fn report_lines_round_trip() {
    let report = fake_report();
    let csv = report_csv(&report);
    let parsed = parse_report_csv(&csv).unwrap();
    assert_eq!(parsed, report);
    assert_eq!(parsed.methods[0].mean(), report.methods[0].mean());
    assert_eq!(parsed.methods[1].std(), report.methods[1].std());
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn summary_rows_match_the_report() {
    let empty = EvalReport::default();
    assert_eq!(report_csv(&empty), "method,permutation,seed,test_ci,params\n");
    assert_eq!(summary_table(&empty).lines().count(), 1);
    let report = fake_report();
    let table = summary_table(&report);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[1].starts_with("coxnet") && lines[1].contains("3/3"));
    assert!(lines[2].starts_with("nn-relu") && lines[2].contains("2/3"));
    let mean = format!("{:.4}", report.methods[0].mean().unwrap());
    assert!(lines[1].contains(&mean));
}

#[test]
fn protocol_is_deterministic() {
    let (data, _) = small_data(RiskKind::Nonlinear, 90, 2.0);
    let mut cfg = Config::default();
    cfg.nn.architecture.hidden_units = 8;
    cfg.nn.train.pretrain_epochs = 2;
    cfg.nn.train.finetune_epochs = 5;
    let coxnet = builtin_method("coxnet", &cfg).unwrap();
    let nn = builtin_method("nn-sigmoid", &cfg).unwrap();
    let run = || run_protocol(&data, &[coxnet.as_ref(), nn.as_ref()], &quick_options(2)).unwrap();
    let a = run();
    assert_eq!(report_csv(&a), report_csv(&run()));
    assert!(a.methods.iter().all(|m| m.test_cis().len() == 2));
}

#[test]
fn trial_logs_resume_to_the_same_report() {
    let (data, _) = small_data(RiskKind::Linear, 60, 2.0);
    let cfg = Config::default();
    let coxnet = builtin_method("coxnet", &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let options = ProtocolOptions {
        run_dir: Some(dir.path().to_path_buf()),
        ..quick_options(2)
    };
    let first = run_protocol(&data, &[coxnet.as_ref()], &options).unwrap();
    let log = dir.path().join("trials").join("coxnet-perm0.log");
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);
    assert!(dir.path().join("models").join("coxnet-perm1.model").exists());
    // rerunning against the existing logs replays them without refitting trials
    let again = run_protocol(&data, &[coxnet.as_ref()], &options).unwrap();
    assert_eq!(first, again);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);
    // a log from another seed is replaced rather than mixed in
    let other = ProtocolOptions {
        base_seed: 5,
        ..options.clone()
    };
    let fresh = run_protocol(
        &data,
        &[coxnet.as_ref()],
        &ProtocolOptions {
            run_dir: None,
            ..other.clone()
        },
    )
    .unwrap();
    assert_eq!(run_protocol(&data, &[coxnet.as_ref()], &other).unwrap(), fresh);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);
}
