use deltafi::bayes::Topology;
use deltafi::campaign::config::SaveTraces;
use deltafi::campaign::report::{brake_series, build, cmd_report, compensation};
use deltafi::campaign::train::{collect, train, TrainingOptions};
use deltafi::campaign::{golden, random, CampaignConfig};
use deltafi::bayes::TemporalNet;
use deltafi::exec::Execution;
use deltafi::fault::FaultModel;
use deltafi::scenario::{run, Trace};
use deltafi::Error;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

fn cfg(out: &Path) -> CampaignConfig {
    CampaignConfig { scenario: "A1".into(), experiments: 12, golden_runs: 2, out: out.to_path_buf(), ..CampaignConfig::default() }
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn output_headers_are_pinned() {
    let tmp = tempfile::tempdir().unwrap();
    let (g, r, rep) = (tmp.path().join("g"), tmp.path().join("r"), tmp.path().join("rep"));
    golden::cmd_golden(&cfg(&g), Execution::Sequential).unwrap();
    random::cmd_random_campaign(&cfg(&r), Execution::Sequential).unwrap();
    cmd_report(&[g.clone(), r.clone()], &rep).unwrap();
    let expect = [
        (g.join("manifest.csv"), "experiment,label,scenario,seed,plan,trace"),
        (g.join("summary.csv"), "scenario,runs,median_min_cipo,median_max_lk,min_min_cipo,max_max_lk,hazards"),
        (
            r.join("runs.csv"),
            "experiment,label,scenario,seed,plan,module,variable,start,duration,min_cipo,max_lk,hazard,digest",
        ),
        (r.join("boxplot.csv"), "label,metric,n,min,whisker_low,q1,median,q3,whisker_high,max"),
        (r.join("hazards.csv"), "label,scenario,experiments,hazards,hazard_rate"),
        (rep.join("mvf.csv"), "label,rank,module,experiments,vulnerable,mvf"),
        (rep.join("compensation.csv"), "label,experiment,scene,brake_diff,c"),
    ];
    for (path, h) in expect {
        assert_eq!(header(&path), h, "{}", path.display());
    }
    assert!(header(&r.join("injections.csv")).starts_with("experiment,"));
    let t = fs::read_dir(r.join("traces")).unwrap().count();
    assert_eq!(t, 12);
}

#[test]
fn campaigns_are_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    random::cmd_random_campaign(&cfg(&a), Execution::Parallel).unwrap();
    random::cmd_random_campaign(&cfg(&b), Execution::Sequential).unwrap();
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        if k.as_os_str() != "campaign.toml" {
            assert!(v == &fb[k], "{} differs", k.display());
        }
    }
}

#[test]
fn report_bounds_and_golden_compensation() {
    let tmp = tempfile::tempdir().unwrap();
    let (g, r) = (tmp.path().join("g"), tmp.path().join("r"));
    golden::cmd_golden(&cfg(&g), Execution::Sequential).unwrap();
    let mut c = cfg(&r);
    c.fault_model = FaultModel::MRandom;
    c.experiments = 10;
    random::cmd_random_campaign(&c, Execution::Sequential).unwrap();
    let rep = build(&[g.clone(), r]).unwrap();
    assert_eq!(rep.mvf.len(), 6);
    assert!(rep.mvf.iter().all(|m| (0.0..=100.0).contains(&m.mvf()) && m.vulnerable <= m.experiments));
    assert_eq!(rep.mvf.iter().map(|m| m.experiments).sum::<usize>(), 10);
    assert!(rep.mvf.windows(2).all(|w| w[0].mvf() >= w[1].mvf()));
    assert_eq!(rep.compensation.len(), 10);
    let gold: Trace = Trace::read(fs::File::open(g.join("traces/golden_A1_0.csv")).unwrap()).unwrap();
    let b = brake_series(&gold);
    assert!(compensation(&b, &b).iter().all(|&x| x == 0.0));
    let golden_only = build(&[g]).unwrap();
    assert!(golden_only.mvf.is_empty() && golden_only.compensation.is_empty());
}

#[test]
fn report_needs_golden_reference_and_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let r = tmp.path().join("r");
    random::cmd_random_campaign(&cfg(&r), Execution::Sequential).unwrap();
    assert!(matches!(build(&[r]), Err(Error::Config(m)) if m.contains("golden")));
    let (g, n) = (tmp.path().join("g"), tmp.path().join("n"));
    golden::cmd_golden(&cfg(&g), Execution::Sequential).unwrap();
    random::cmd_random_campaign(&CampaignConfig { save_traces: SaveTraces::None, ..cfg(&n) }, Execution::Sequential).unwrap();
    assert!(matches!(build(&[g, n]), Err(Error::Config(m)) if m.contains("trace")));
}

#[test]
fn trained_model_file_round_trips() {
    let topo = Topology::ads();
    let sc = Arc::new(deltafi::scenario::library::by_id("A5").unwrap());
    let opts = TrainingOptions { reps: 4, ..TrainingOptions::default() };
    let (data, manifest) = collect(&topo, &[sc], &Default::default(), &opts, 0, Execution::Parallel).unwrap();
    assert_eq!(manifest.len(), 57);
    let (model, report) = train(topo, &data, &opts).unwrap();
    assert!(report.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-6 * w[0].abs()));
    let mut buf = Vec::new();
    model.write(&mut buf).unwrap();
    let back = TemporalNet::read(buf.as_slice(), Topology::ads()).unwrap();
    assert_eq!(back.initial(), model.initial());
    assert_eq!(back.transition(), model.transition());
    let mut again = Vec::new();
    back.write(&mut again).unwrap();
    assert_eq!(buf, again);
    let broken = String::from_utf8(buf).unwrap().replacen("cpd\t", "cpd\tbogus\t", 1);
    assert!(matches!(TemporalNet::read(broken.as_bytes(), Topology::ads()), Err(Error::Parse(_))));
}

#[test]
fn golden_runs_repeat_exactly() {
    let sc = Arc::new(deltafi::scenario::library::by_id("A6").unwrap());
    let a = run(&sc, &Default::default(), None, 3).unwrap();
    let b = run(&sc, &Default::default(), None, 3).unwrap();
    assert_eq!(a.digest(), b.digest());
    let mut buf = Vec::new();
    a.write(&mut buf).unwrap();
    assert_eq!(Trace::read(buf.as_slice()).unwrap().digest(), a.digest());
}

#[test]
fn config_errors_are_reported_by_field() {
    assert!(matches!(CampaignConfig::from_toml("runz = 3"), Err(Error::Config(_))));
    let bad = CampaignConfig { fault_model: FaultModel::OneFixed, ..CampaignConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains("`targets`"));
    let bad = CampaignConfig { targets: vec!["nope.var:set_max".into()], ..CampaignConfig::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

#[test]
fn parallel_outputs_match_sequential() {
    let tmp = tempfile::tempdir().unwrap();
    let (s, p) = (tmp.path().join("s"), tmp.path().join("p"));
    let c = CampaignConfig { fault_model: FaultModel::MRandom, ..cfg(&s) };
    random::cmd_random_campaign(&c, Execution::Sequential).unwrap();
    let c = CampaignConfig { out: p.clone(), ..c };
    deltafi::exec::with_workers(4, || random::cmd_random_campaign(&c, Execution::Parallel)).unwrap();
    let (a, b) = (files(&s), files(&p));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        if k != Path::new("campaign.toml") {
            assert!(v == &b[k], "{} differs", k.display());
        }
    }
}
