use std::fs;

use ndarray::Array2;
use proptest::prelude::*;

use hprnnpb::harness::experiment::{reproduce_experiment, write_report, Experiment};
use hprnnpb::harness::files::{read_sequence, write_sequence};
use hprnnpb::harness::persist::{state_from_str, state_to_string};
use hprnnpb::harness::{load_state, save_state, ExperimentConfig};
use hprnnpb::modes::{predict, recognize, train, TrainConfig};
use hprnnpb::trajectories::{make_dataset, DatasetSpec};
use hprnnpb::{Color, LabeledSequence, NetworkConfig, NetworkState, ObservationSequence, SequenceLabel, Shape};

fn small_net() -> NetworkConfig {
    NetworkConfig {
        n_d: 8,
        n_v: 8,
        eta_ventral: 1e-3,
        m_gamma: 1.0,
        ..NetworkConfig::default()
    }
}

#[test]
fn trained_model_survives_save_and_load() {
    let data = make_dataset(&DatasetSpec {
        repeats: 1,
        seed: 4,
        ..DatasetSpec::default()
    })
    .unwrap();
    let mut state = NetworkState::init(small_net(), 4).unwrap();
    let out = train(&mut state, &data, &TrainConfig { max_epochs: 200, ..TrainConfig::default() }).unwrap();
    assert!(out.cost_curve[199] < out.cost_curve[0]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    save_state(&state, &path).unwrap();
    let loaded = load_state(&path).unwrap();
    assert_eq!(loaded, state);

    let seq = &data[1].sequence;
    let a = recognize(&state, seq, seq.len(), 25).unwrap();
    let b = recognize(&loaded, seq, seq.len(), 25).unwrap();
    assert_eq!(a, b);
    let (d, v) = a.final_rho(1, 1);
    let g1 = predict(&state, &d, &v, seq.frame(0), 19).unwrap();
    let g2 = predict(&loaded, &d, &v, seq.frame(0), 19).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn early_stopped_run_still_writes_valid_reports() {
    let mut cfg = ExperimentConfig {
        network: NetworkConfig { n_d: 4, n_v: 4, ..ExperimentConfig::default().network },
        ..ExperimentConfig::default()
    };
    cfg.train.target_cost = 1e9;
    cfg.recognition.epochs = 2;
    let report = reproduce_experiment(Experiment::Fig6, &cfg).unwrap();
    assert_eq!(report.cost_curve.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    write_report(&report, &cfg, dir.path()).unwrap();
    for (file, header) in [
        ("cost_curve.csv", "epoch,cost"),
        ("pb_table.csv", "sequence,shape,color,repeat,rho_d0,rho_v0,pb_d0,pb_v0"),
        ("recognition_trace.csv", "sequence,shape,color,epoch,cost,rho_d0,rho_v0,pb_d0,pb_v0"),
        (
            "prediction_trace.csv",
            "sequence,shape,color,step,gen0,gen1,gen2,gen3,true0,true1,true2,true3,sq_err",
        ),
    ] {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header), "{file}");
        let width = header.split(',').count();
        assert!(lines.all(|l| l.split(',').count() == width), "{file}");
    }
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sequence_csv_roundtrip_is_exact(
        values in prop::collection::vec(-1e3f64..1e3, 4..80),
        repeat in 0usize..50,
        green in any::<bool>(),
        square in any::<bool>(),
    ) {
        let rows = values.len() / 4;
        let frames = Array2::from_shape_vec((rows, 4), values[..rows * 4].to_vec()).unwrap();
        let item = LabeledSequence {
            label: SequenceLabel {
                shape: if square { Shape::Square } else { Shape::Cosine },
                color: if green { Color::Green } else { Color::Yellow },
                repeat,
            },
            sequence: ObservationSequence::new(frames),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.csv");
        write_sequence(&path, &item).unwrap();
        prop_assert_eq!(read_sequence(&path).unwrap(), item);
    }

    #[test]
    fn state_text_roundtrip_is_exact(seed in any::<u64>(), n_d in 1usize..6, n_v in 1usize..6, pb in 1usize..3) {
        let cfg = NetworkConfig { n_d, n_v, n_pb_d: pb, ..NetworkConfig::default() };
        let mut state = NetworkState::init(cfg, seed).unwrap();
        state.rho_d.fill(1.0 / 3.0);
        state.lr.matrix_mut(2).fill(std::f64::consts::E * 1e-5);
        let back = state_from_str(&state_to_string(&state).unwrap()).unwrap();
        prop_assert_eq!(back, state);
    }
}
