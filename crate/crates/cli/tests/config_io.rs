use std::io::Write;

use soliton_lab::config::{load_config, parse_config, ConfigError, EtaSetting, RunConfig};

fn violations(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(ConfigError::Invalid(v)) => v.iter().map(|x| x.to_string()).collect(),
        other => panic!("expected violations, got {other:?}"),
    }
}

#[test]
fn minimal_file_gets_documented_defaults() {
    let c = parse_config("[physics]\nepsilon = 0.2\n").unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.grid.extent, 80.0);
    assert_eq!(c.grid.points, 4096);
    assert_eq!(c.time.dt, 1e-3);
    assert_eq!(c.halo.eta, EtaSetting::Rule("equal-epsilon".into()));
    assert_eq!(parse_config("").unwrap(), RunConfig::default());
}

#[test]
fn full_file_is_read() {
    let text = r#"
[grid]
dim = 1
extent = 60.0
points = 2048

[physics]
mass = 2.0
nu = 3.5
epsilon = 0.25
potential = { kind = "linear", slope = 0.1 }

[initial]
qbar = [-3.0]
pbar = [0.5]
energy_bound = 5.0
perturbation = { kind = "gaussian", amplitude = 0.01, width = 1.0, center = [0.0] }

[time]
dt = 5e-4
t_final = 2.0
sample_stride = 20
checkpoint_stride = 1000

[halo]
eta = 0.3
refine = 8

[ground_state]
tolerance = 1e-10
extent = 120.0
points = 4096

[sweep]
epsilons = [0.4, 0.25]
threads = 2
grid_overrides = [{ epsilon = 0.25, points = 4096 }]

[output]
directory = "out"
formats = ["csv"]
"#;
    let c = parse_config(text).unwrap();
    assert_eq!(c.physics.nu, 3.5);
    assert_eq!(c.halo.eta, EtaSetting::Value(0.3));
    assert_eq!(c.ground_state_grid().unwrap().extent(0), 120.0);
    let plan = c.sweep_plan().unwrap();
    assert_eq!(plan.grid_overrides, vec![(0.25, 4096)]);
    assert!(c.wants("csv") && !c.wants("svg"));
    assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
}

#[test]
fn supercritical_exponent_cites_the_bound() {
    let v = violations("[physics]\nnu = 7\n");
    assert_eq!(v.len(), 1);
    assert!(v[0].starts_with("[physics].nu"), "{v:?}");
    assert!(v[0].contains("2 + 4/N = 6"), "{v:?}");
    let v2 = violations("[grid]\ndim = 2\nextent = 20.0\npoints = 256\n[physics]\nnu = 4.0\n[initial]\nqbar=[0.0,0.0]\npbar=[0.0,0.0]\n");
    assert!(v2.iter().any(|s| s.contains("2 + 4/N = 4")), "{v2:?}");
}

#[test]
fn negative_dt_names_the_field() {
    let v = violations("[time]\ndt = -0.001\n");
    assert_eq!(v.len(), 1);
    assert!(v[0].starts_with("[time].dt"), "{v:?}");
}

#[test]
fn all_violations_are_listed_at_once() {
    let v = violations(
        "[physics]\nnu = 9\nmass = -1.0\n[time]\ndt = -1.0\nsample_stride = 0\n[halo]\neta = \"tiny\"\n[output]\nformats = [\"png\"]\n",
    );
    for key in ["[physics].nu", "[physics].mass", "[time].dt", "[time].sample_stride", "[halo].eta", "[output].formats"] {
        assert!(v.iter().any(|s| s.starts_with(key)), "missing {key} in {v:?}");
    }
}

#[test]
fn unknown_keys_are_rejected_with_paths() {
    let v = violations("[grid]\nextnt = 3.0\n[time]\nstep = 1\n[colour]\nx = 1\n");
    for key in ["[grid].extnt", "[time].step", "[colour]"] {
        assert!(v.iter().any(|s| s.starts_with(key) && s.contains("unknown")), "missing {key} in {v:?}");
    }
    let nested = violations("[physics.potential]\nkind = \"harmonic\"\nstiffness = 1.0\nshift = 2.0\n");
    assert!(nested.iter().any(|s| s.contains("shift") && s.contains("physics.potential")), "{nested:?}");
}

#[test]
fn type_errors_name_the_field() {
    let v = violations("[time]\ndt = \"fast\"\n");
    assert!(v[0].starts_with("[time].dt"), "{v:?}");
}

#[test]
fn syntax_errors_carry_line_numbers() {
    match parse_config("[grid]\nextent = 80.0\npoints = = 3\n") {
        Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn resolution_is_checked_up_front() {
    let v = violations("[grid]\npoints = 512\n[physics]\nepsilon = 0.2\n");
    assert!(v.iter().any(|s| s.starts_with("[grid].points")), "{v:?}");
}

#[test]
fn sweep_values_are_checked() {
    let v = violations("[sweep]\nepsilons = []\nthreads = 0\n");
    assert!(v.iter().any(|s| s.starts_with("[sweep].epsilons")));
    assert!(v.iter().any(|s| s.starts_with("[sweep].threads")));
    let dup = violations("[sweep]\nepsilons = [0.4, 0.4]\n");
    assert!(dup.iter().any(|s| s.contains("distinct")));
}

#[test]
fn files_load_from_disk() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "[physics]\nepsilon = 0.3").unwrap();
    assert_eq!(load_config(f.path()).unwrap().physics.epsilon, 0.3);
    assert!(matches!(load_config(std::path::Path::new("/nonexistent/x.toml")), Err(ConfigError::Io { .. })));
}

#[test]
fn content_hash_ignores_the_output_directory() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.output.directory = "elsewhere".into();
    assert_eq!(a.content_hash(), b.content_hash());
    b.time.dt = 5e-4;
    assert_ne!(a.content_hash(), b.content_hash());
}
