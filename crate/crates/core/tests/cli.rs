use std::fs;
use std::path::Path;
use std::process::Command;

use activerods::harness::cli;

fn config(out: &Path, extra: &str) -> String {
    format!(
        r#"
[model]
epsilon = 0.05
D = 0.2
T = 0.2
V = {{ family = "shifted-sine", params = {{ g0 = 1.0, a = 0.5 }} }}
Phi = {{ family = "shear", params = {{ gamma = 0.5 }} }}

[grid]
y_max = 4.0
n_y = 32
n_phi = 16
layer_cells = 8

[experiment]
epsilon_list = [0.08, 0.04, 0.02]
particles = 2000
line_n_y = 64
line_n_phi = 8

[output]
directory = "{}"
{extra}
"#,
        out.display()
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("activerods").chain(args.iter().copied()))
}

#[test]
fn sweep_writes_documented_columns_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ca = write_config(tmp.path(), "a.toml", &config(&a, ""));
    let cb = write_config(tmp.path(), "b.toml", &config(&b, ""));
    assert_eq!(run(&["sweep", "--config", &ca]), 0);
    assert_eq!(run(&["sweep", "--config", &cb]), 0);
    let text = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "epsilon,t_final,l1_error,l1_error_refined,l1_R,l1_r,mass_full,mass_limit_combined,order_vs_prev"
    );
    assert_eq!(text.lines().count(), 4);
    for name in ["sweep.csv", "pairings.csv", "residual.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn every_config_subcommand_writes_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let c = write_config(tmp.path(), "c.toml", &config(&out, ""));
    let expected: [(&str, &[(&str, &str)]); 7] = [
        ("run-full", &[("full_snapshots.csv", "t,y,phi,f")]),
        ("run-limit", &[("limit_bulk.csv", "t,y,phi,rho_bulk"), ("limit_wall.csv", "t,phi,rho_wall")]),
        ("composite", &[("composite.csv", "y,phi,f_bar,f_hat"), ("residual.csv", "epsilon,l1_R,l1_r")]),
        (
            "decompose",
            &[("decompose_m.csv", "t,phi,m"), ("energy.csv", "t,E,dissipation"), ("pairings.csv", "epsilon,test,pairing")],
        ),
        ("particles", &[("particles_binned.csv", "y,phi,density"), ("particles_tv.csv", "particles,seed,dt,tv_distance")]),
        ("check-coercivity", &[("coercivity.csv", "seed,lambda,gap")]),
        ("check-resolvent", &[("resolvent.csv", "eps_reg,lambda,bound_ratio")]),
    ];
    for (cmd, files) in expected {
        assert_eq!(run(&[cmd, "--config", &c]), 0, "{cmd}");
        for (name, header) in files {
            let text = fs::read_to_string(out.join(name)).unwrap();
            assert_eq!(text.lines().next().unwrap(), *header, "{cmd}: {name}");
            assert!(text.lines().count() > 1);
        }
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["run-full", "--config", "/nonexistent/x.toml"]), 2);
    let unknown = write_config(tmp.path(), "u.toml", &config(&out, "[extra]\nkey = 1\n"));
    assert_eq!(run(&["run-full", "--config", &unknown]), 2);
    let stalled = config(&out, "").replace("g0 = 1.0", "g0 = -0.5");
    let stalled = write_config(tmp.path(), "s.toml", &stalled);
    assert_eq!(run(&["run-full", "--config", &stalled]), 3);
    let huge = config(&out, "[time]\ndt = 0.01\n").replace("D = 0.2", "D = 1e9");
    let huge = write_config(tmp.path(), "h.toml", &huge);
    assert_eq!(run(&["run-full", "--config", &huge]), 2);
}

#[test]
fn binary_honours_output_directory_override() {
    let tmp = tempfile::tempdir().unwrap();
    let redirected = tmp.path().join("redirected");
    let c = write_config(tmp.path(), "c.toml", &config(&tmp.path().join("ignored"), ""));
    let status = Command::new(env!("CARGO_BIN_EXE_activerods"))
        .args(["run-limit", "--config", &c])
        .env("ACTIVERODS_OUT_DIR", &redirected)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains("limit_wall.csv"));
    assert!(redirected.join("limit_bulk.csv").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn shipped_reference_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let cfg = activerods::harness::RunConfig::from_path(&path).unwrap();
    assert_eq!(cfg.experiment.epsilon_list, vec![0.08, 0.04, 0.02, 0.01]);
    let reference = activerods::acceptance::reference_config(0.2, cfg.experiment.epsilon_list.clone());
    assert_eq!(cfg.model, reference.model);
    assert_eq!(cfg.grid, reference.grid);
    assert_eq!(cfg.time, reference.time);
}
