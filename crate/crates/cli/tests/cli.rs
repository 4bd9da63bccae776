use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    pvh_cli::scenarios_dir().join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

fn pvh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvh"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ping_sweep_matches_golden_csv() {
    let topo = scenario("fig_forwarding.topo");
    let o = pvh(&[
        "run",
        "--topo",
        topo.to_str().unwrap(),
        "--seed",
        "42",
        "--exp",
        "ping-sweep",
        "--buckets",
        "1-3",
        "--pings",
        "2",
    ]);
    assert_eq!(stdout(&o), golden("fig_forwarding_ping.csv"));
}

#[test]
fn cluster_dump_matches_golden() {
    let topo = scenario("fig_cluster.topo");
    let o = pvh(&[
        "run",
        "--topo",
        topo.to_str().unwrap(),
        "--seed",
        "42",
        "--exp",
        "cluster-dump",
    ]);
    assert_eq!(stdout(&o), golden("fig_cluster_dump.txt"));
}

#[test]
fn csv_header_is_fixed() {
    let topo = scenario("home19.topo");
    let t = topo.to_str().unwrap();
    let header = "scenario,seed,kind,src,dst,hops,seq,value_us,first,stage";
    for args in [
        vec![
            "run",
            "--topo",
            t,
            "--exp",
            "ping-sweep",
            "--buckets",
            "2",
            "--pairs",
            "2",
            "--pings",
            "2",
        ],
        vec![
            "run",
            "--topo",
            t,
            "--exp",
            "service-bench",
            "--mode",
            "pull",
            "--services",
            "20",
        ],
        vec!["run", "--topo", t, "--buckets", "40"],
    ] {
        let out = stdout(&pvh(&args));
        assert_eq!(out.lines().next(), Some(header));
    }
}

#[test]
fn parse_errors_exit_nonzero_and_name_the_line() {
    let dir = std::env::temp_dir().join(format!("pvh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.topo");
    std::fs::write(
        &bad,
        "node a cap 0 0 0\nnode b cap 0 0 0\nlink p2p a:1 b:1\nlink p2p a:1 b:2\n",
    )
    .unwrap();
    let o = pvh(&["run", "--topo", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.topo") && err.contains("line 4"), "{err}");

    let o = pvh(&["run", "--topo", dir.join("missing.topo").to_str().unwrap()]);
    assert!(!o.status.success());

    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "seeed = 3\n").unwrap();
    let o = pvh(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--topo",
        scenario("home19.topo").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unreachable_fails_and_empty_bucket_warns() {
    let dir = std::env::temp_dir().join(format!("pvh-cli-split-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let split = dir.join("split.topo");
    std::fs::write(&split, "node a cap 1 1 1\nnode b cap 0 0 0\nnode c cap 0.5 0.5 0.5\nnode d cap 0 0 0.1\nlink p2p a:1 b:1\nlink p2p c:1 d:1\n").unwrap();
    let o = pvh(&["run", "--topo", split.to_str().unwrap(), "--buckets", "1"]);
    assert!(o.status.success());
    let o = pvh(&["run", "--topo", split.to_str().unwrap(), "--buckets", "1,2"]);
    assert!(
        o.status.success(),
        "no pair at distance 2 is only a warning"
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped bucket 2"));

    let dead = dir.join("dead.topo");
    std::fs::write(
        &dead,
        "node a cap 1 1 1\nnode b cap 0 0 0\nlink p2p a:1 b:1 loss 1.0\n",
    )
    .unwrap();
    let o = pvh(&["run", "--topo", dead.to_str().unwrap(), "--buckets", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unreachable"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    let topo = scenario("home19.topo");
    let t = topo.to_str().unwrap();
    for exp in [["--exp", "ping-sweep"], ["--exp", "cluster-dump"]] {
        let args = [
            "run", "--topo", t, "--seed", "9", exp[0], exp[1], "--pings", "2",
        ];
        assert_eq!(stdout(&pvh(&args)), stdout(&pvh(&args)));
    }
}

#[test]
fn flags_override_config_file() {
    let dir = std::env::temp_dir().join(format!("pvh-cli-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "topo = {:?}\nseed = 5\n[experiment]\nkind = \"cluster-dump\"\n",
            scenario("fig_cluster.topo")
        ),
    )
    .unwrap();
    let from_file = stdout(&pvh(&["run", "--config", cfg.to_str().unwrap()]));
    assert!(from_file.starts_with("clusters: 2"));
    let out = dir.join("out.csv");
    let o = pvh(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--exp",
        "ping-sweep",
        "--buckets",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout(&o).is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains(",5,rtt,"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn gen_output_loads() {
    let text = stdout(&pvh(&["gen", "--nodes", "30", "--seed", "4"]));
    let t = pvh::sim::Topology::parse(&text).unwrap();
    assert_eq!(t.nodes.len(), 30);
    assert!(t.is_connected());
}
