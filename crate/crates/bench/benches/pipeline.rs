use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lrp_transfer::channels::make_channel_set;
use lrp_transfer::domain::TrialRef;
use lrp_transfer::eval::{prepare_subject, relabel, RelabelScan, SubjectTrials, N_WINDOWS};
use lrp_transfer::model::{fit_pipeline, train_svm, ClassWeights, SvmFormulation, TrainConfig};
use lrp_transfer::onset::{label_onsets, OnsetParams};
use lrp_transfer::preprocess::{prepare_trial, PreprocessParams, WindowGrid};
use lrp_transfer::synth::{generate_session, SynthConfig};
use lrp_transfer::{ChannelSet, Label, MovementCondition, SessionData};
use ndarray::Array2;

fn session(set_index: usize) -> SessionData {
    let cfg = SynthConfig {
        seed: 1,
        set_index,
        condition: MovementCondition::Bilateral,
        trials_per_set: 15,
        ..SynthConfig::default()
    };
    let (mut s, _) = generate_session(&cfg).unwrap();
    label_onsets(&mut s, &OnsetParams::default());
    s
}

fn subject(cs: &ChannelSet) -> SubjectTrials {
    let sessions: Vec<_> = (0..2).map(session).collect();
    prepare_subject("bench", &sessions, cs, &WindowGrid::default(), &PreprocessParams::default()).unwrap()
}

fn preprocessing(c: &mut Criterion) {
    let s = session(0);
    let cs = make_channel_set("custom-32").unwrap();
    let rec = s.eeg.select_channels(&cs).unwrap();
    let t = &s.trials[0];
    let r = TrialRef {
        subject: "bench".into(),
        task: s.task,
        set_index: s.set_index,
        trial_index: t.index,
    };
    let (grid, params) = (WindowGrid::default(), PreprocessParams::default());
    c.bench_function("prepare_trial custom-32", |b| {
        b.iter(|| prepare_trial(black_box(&rec), t.onset_sample.unwrap(), &grid, &params, r.clone()).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let n = 75;
    let y: Vec<Label> = (0..n).map(|i| if i % 5 < 2 { Label::Lrp } else { Label::NoLrp }).collect();
    let x = Array2::from_shape_fn((n, 16), |(i, k)| {
        let h = ((i * 16 + k) as f64 * 0.618_033_988_7).fract() - 0.5;
        h + if y[i].is_lrp() && k % 4 == 3 { 0.4 } else { 0.0 }
    });
    for cost in [1e-3, 1.0] {
        for form in [SvmFormulation::L1Weights, SvmFormulation::L1Slack] {
            c.bench_function(&format!("svm {} C={cost:e}", form.as_str()), |b| {
                b.iter(|| train_svm(black_box(x.view()), &y, cost, ClassWeights::default(), form).unwrap())
            });
        }
    }
}

fn relabelling(c: &mut Criterion) {
    let pred: Vec<Label> = (0..N_WINDOWS).map(|k| if k % 7 < 3 { Label::NoLrp } else { Label::Lrp }).collect();
    c.bench_function("relabel", |b| b.iter(|| relabel(black_box(&pred), RelabelScan::IncludeFixed).unwrap()));
}

fn training(c: &mut Criterion) {
    let cs = make_channel_set("custom-16").unwrap();
    let s = subject(&cs);
    let train = s.select(MovementCondition::Bilateral, &[0, 1], &cs).unwrap();
    let mut g = c.benchmark_group("fit_pipeline");
    g.sample_size(10);
    g.bench_function("custom-16, 30 trials", |b| b.iter(|| fit_pipeline(black_box(&train), &cs, &TrainConfig::default()).unwrap()));
    g.finish();
}

criterion_group!(benches, preprocessing, solver, relabelling, training);
criterion_main!(benches);
