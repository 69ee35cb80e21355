use gradabs::artifacts::{load_run, read_manifest, write_run, SERIES, SERIES_COLUMNS};
use gradabs::experiments::{convergence_to_vinf, localization_check, monotone_support_check};
use gradabs::io;
use gradabs::{Error, Grid, InitialData, Mode, Params, RunConfig, StepControl};

fn config(dim: usize, cells: usize, half_width: f64, t_end: f64) -> RunConfig {
    RunConfig::new(
        Params::new(3.0, 1.5, dim).unwrap(),
        Grid::new(dim, half_width, cells).unwrap(),
        InitialData::Cap { amplitude: 0.003, radius: 1.0, exponent: 4.0 },
        Mode::Original,
        StepControl { snapshots_per_decade: 4, ..StepControl::until(t_end) },
    )
}

#[test]
fn run_round_trips_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(1, 128, 2.0, 100.0);
    let out = cfg.integrator().run(cfg.initial_field().unwrap());
    assert!(out.abort.is_none());
    let tr = out.trajectory;
    let manifest = write_run(dir.path(), &cfg, &tr, None, &[], &[]).unwrap();
    assert_eq!(manifest.config_hash, cfg.hash());
    assert!(!manifest.aborted);
    assert_eq!(manifest.decay_exponent, -2.0);

    let (back_manifest, back) = load_run(dir.path()).unwrap();
    assert_eq!(back_manifest, manifest);
    assert_eq!(back.len(), tr.len());
    for k in 0..tr.len() {
        assert_eq!(back.times[k], tr.times[k]);
        let a: Vec<u64> = tr.snapshots[k].values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.snapshots[k].values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b, "snapshot {k}");
        assert_eq!(back.positivity_set(k).mask(), tr.positivity_set(k).mask());
    }

    // Verdicts recomputed from disk agree with the in-memory ones.
    assert_eq!(localization_check(&back), localization_check(&tr));
    assert_eq!(monotone_support_check(&back), monotone_support_check(&tr));
    assert_eq!(convergence_to_vinf(&back).unwrap(), convergence_to_vinf(&tr).unwrap());
}

#[test]
fn series_csv_has_pinned_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(1, 64, 2.0, 1.0);
    let tr = cfg.integrator().run(cfg.initial_field().unwrap()).trajectory;
    write_run(dir.path(), &cfg, &tr, None, &[], &[]).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join(SERIES)).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, SERIES_COLUMNS);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), tr.len());
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<f64>().unwrap(), tr.times[k]);
        assert_eq!(row[3].parse::<f64>().unwrap(), tr.norms[k].linf);
    }
}

#[test]
fn two_dimensional_snapshots_are_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(2, 32, 2.0, 0.1);
    let tr = cfg.integrator().run(cfg.initial_field().unwrap()).trajectory;
    let manifest = write_run(dir.path(), &cfg, &tr, None, &[], &[]).unwrap();
    let last = manifest.snapshots.last().unwrap();
    assert!(last.file.ends_with(".bin"));
    let field = io::load(&dir.path().join(&last.file)).unwrap();
    assert_eq!(field, tr.snapshots[tr.len() - 1]);
    let bytes = std::fs::read(dir.path().join(&last.file)).unwrap();
    assert_eq!(io::read_binary(bytes.as_slice()).unwrap(), field);
}

#[test]
fn aborted_run_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(1, 64, 1.1, 1000.0);
    cfg.initial = InitialData::Cap { amplitude: 10.0, radius: 1.0, exponent: 1.0 };
    cfg.mode = Mode::PlapOnly;
    let out = cfg.integrator().run(cfg.initial_field().unwrap());
    let err = out.abort.expect("spreads into the boundary layer");
    assert!(matches!(err, Error::BoundaryTouch { .. }), "{err}");
    write_run(dir.path(), &cfg, &out.trajectory, Some(&err), &[], &[]).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    assert!(m.aborted);
    assert!(m.abort_reason.unwrap().contains("boundary"));
    assert!(!m.snapshots.is_empty());
    let (_, back) = load_run(dir.path()).unwrap();
    assert_eq!(back.len(), out.trajectory.len());
}

#[test]
fn corrupt_snapshot_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(1, 32, 2.0, 0.01);
    let tr = cfg.integrator().run(cfg.initial_field().unwrap()).trajectory;
    let m = write_run(dir.path(), &cfg, &tr, None, &[], &[]).unwrap();
    std::fs::write(dir.path().join(&m.snapshots[0].file), "x,value\nnot,a number\n").unwrap();
    assert!(load_run(dir.path()).is_err());
}
