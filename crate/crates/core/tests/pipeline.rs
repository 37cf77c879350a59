use std::fs::{self, OpenOptions};
use std::io::Write;

use infersel::features::extract;
use infersel::harness::{build_dataset, run_all, RecordStore};
use infersel::inference::{meta_run, AlgorithmName, RunLimits};
use infersel::model_io::{build_corpus, generate, parse_fge, write_fge, ClassSpec, GeneratorKind};
use infersel::selection::LabelParams;
use infersel::{FactorGraphF32, FactorGraphF64};

#[test]
fn single_precision_models_solve_and_extract() {
    for g in GeneratorKind::ALL {
        let spec = ClassSpec::new(g).vars(16, 20);
        let a: FactorGraphF64 = generate(&spec, 11).unwrap();
        let b: FactorGraphF32 = generate(&spec, 11).unwrap();
        let (fa, fb) = (extract(&a), extract(&b));
        for (x, y) in fa.values.iter().zip(&fb.values) {
            assert!((x - y).abs() <= 1e-4 * (1.0 + x.abs()), "{g:?}: {x} vs {y}");
        }
        for alg in AlgorithmName::POOL {
            let r = meta_run(alg, &b, "f32", &RunLimits::default(), 0);
            if r.completed() {
                let e = b.evaluate_energy(&r.labelling().unwrap()).unwrap() as f64;
                assert!((e - r.energy.unwrap()).abs() <= 1e-9 * e.abs().max(1.0));
            }
        }
        let back: FactorGraphF32 = parse_fge(&write_fge(&b)).unwrap();
        assert_eq!(back, b);
    }
}

#[test]
fn interrupted_store_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [ClassSpec::new(GeneratorKind::ChainTree).vars(6, 8), ClassSpec::new(GeneratorKind::GridPotts).vars(9, 16)];
    let m = build_corpus(&specs, 4, 1, dir.path()).unwrap();
    let path = dir.path().join("records.jsonl");
    let algs = [AlgorithmName::Um, AlgorithmName::Icm, AlgorithmName::Trws];
    let mut store = RecordStore::open(&path).unwrap();
    run_all(&m, &algs[..2], &RunLimits::default(), 0, 2, &mut store).unwrap();

    // a write torn by a crash
    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"alg\":\"TRWS\",\"params\":{").unwrap();
    drop(f);

    let mut resumed = RecordStore::open(&path).unwrap();
    assert_eq!(resumed.corrupt_lines().len(), 1);
    assert_eq!(resumed.len(), 16);
    let s = run_all(&m, &algs, &RunLimits::default(), 0, 2, &mut resumed).unwrap();
    assert_eq!((s.new, s.skipped), (8, 16));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 24);

    let ds = build_dataset(&m, &RecordStore::open(&path).unwrap(), &LabelParams::default()).unwrap();
    assert_eq!(ds.rows.len(), 8);
    assert!(ds.excluded.is_empty());
}
