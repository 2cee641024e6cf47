//! Acceptance suite: one pass/fail line per criterion.

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tc_core::augment::{
    num_perturbed, random_insertion, random_swap, switchout, synonym_replacement, token_substitution, AugmentOpKind,
    Augmenter, Temperature,
};
use tc_core::corpus::{SynonymLexicon, TokenizedExample, Vocabulary};
use tc_core::curriculum::{
    compose_batch, make_schedule, preset_schedule, BatchKey, Preset, Schedule, ScheduleBudgets, ScheduleKind, TauRule,
    CONTROL_WINDOW,
};
use tc_core::encoder::EncoderSpec;
use tc_core::mining::sample_hard_negative_triplets;
use tc_core::net::{cosine_distance, embed_eval, gradcheck_suite, triplet_loss, Margin, TripletNetParams};
use tc_core::rng::{self, Draw, Purpose};
use tc_core::synth::SynthConfig;
use tc_core::trainer::{
    evaluate_1nn, run_experiment, DataConfig, ExperimentGrid, GridSampler, LabeledFeatures,
    TrainConfig, Trainer, TrainingData,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tau(v: f64) -> Temperature {
    Temperature::new(v).unwrap()
}

fn taus() -> Vec<Temperature> {
    (1..=5).map(|t| Temperature::tenths(t).unwrap()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let reports = gradcheck_suite(2024, 20).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    ensure(reports.len() >= 20, || format!("{} configurations", reports.len()))?;
    ensure(worst < 1e-5, || format!("max relative error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("max_rel_error={worst:.3e} over {} configs in {elapsed:.2?}", reports.len()))
}

/// Embeddings with prescribed cosine distances to the anchor `(1, 0)`.
fn at_distance(d: f64) -> Vec<f64> {
    let cos = 1.0 - d;
    vec![cos, (1.0 - cos * cos).sqrt()]
}

fn criterion_2() -> Outcome {
    let m = Margin::new(0.4).unwrap();
    let a = [1.0, 0.0];
    let (p, n) = (at_distance(0.2), at_distance(0.5));
    let l1 = triplet_loss(&a, &p, &n, m).unwrap();
    ensure((l1 - 0.1).abs() <= 1e-12, || format!("L(0.2, 0.5) = {l1}"))?;
    let l2 = triplet_loss(&a, &at_distance(0.1), &at_distance(0.9), m).unwrap();
    ensure(l2 == 0.0, || format!("clamped case = {l2}"))?;
    let e = [0.3, -0.7, 0.2];
    let l3 = triplet_loss(&[1.0, 2.0, 0.5], &e, &e, m).unwrap();
    ensure((l3 - 0.4).abs() <= 1e-12, || format!("e_p = e_n gives {l3}"))?;
    Ok(format!("{l1:.15} / {l2} / {l3:.15}"))
}

/// Records every `below` draw so swaps can be replayed.
struct Recording<D> {
    inner: D,
    below: Vec<usize>,
}

impl<D: Draw> Draw for Recording<D> {
    fn below(&mut self, n: usize) -> usize {
        let v = self.inner.below(n);
        self.below.push(v);
        v
    }

    fn unit(&mut self) -> f64 {
        self.inner.unit()
    }
}

fn diff_positions(a: &[String], b: &[String]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn criterion_3() -> Outcome {
    let mut gen = rng::stream(3, Purpose::Synth, 0);
    let sentences: Vec<Vec<String>> = (0..1000)
        .map(|s| {
            let len = 1 + gen.below(50);
            (0..len).map(|i| format!("w{s}x{i}")).collect()
        })
        .collect();
    // Every token has synonyms, none equal to itself; the switchout
    // vocabulary is disjoint from the sentences.
    let lexicon = SynonymLexicon::from_entries(
        sentences
            .iter()
            .flatten()
            .map(|w| (w.clone(), vec![format!("{w}_a"), format!("{w}_b")])),
    );
    let vocab = Vocabulary::from_tokens((0..500).map(|i| format!("v{i}")));
    let is_inserted = |t: &str| t.ends_with("_a") || t.ends_with("_b");
    let mut checks = 0usize;
    for (s, input) in sentences.iter().enumerate() {
        for t in taus() {
            let n = num_perturbed(t, input.len());
            ensure(n == ((t.value() * input.len() as f64).round() as usize).max(1), || {
                format!("num_perturbed({t}, {})", input.len())
            })?;
            let mut r = rng::stream(s as u64, Purpose::Augment, (t.value() * 10.0) as u64);

            let sr = synonym_replacement(input, n, &lexicon, &mut r);
            ensure(sr.len() == input.len() && diff_positions(input, &sr) == n, || format!("SR on #{s} at {t}"))?;
            let ts = token_substitution(input, t, &lexicon, &mut r);
            ensure(diff_positions(input, &ts) == n, || format!("substitution on #{s} at {t}"))?;
            let so = switchout(input, t, &vocab, &mut r).unwrap();
            ensure(so.len() == input.len() && diff_positions(input, &so) == n, || {
                format!("switchout on #{s} at {t}")
            })?;

            let ri = random_insertion(input, n, &lexicon, &mut r);
            let kept: Vec<&String> = ri.iter().filter(|w| !is_inserted(w)).collect();
            ensure(ri.len() == input.len() + n && kept.iter().copied().eq(input.iter()), || {
                format!("insertion on #{s} at {t}")
            })?;

            let mut rec = Recording { inner: &mut r, below: Vec::new() };
            let rs = random_swap(input, n, &mut rec);
            let mut replay = input.clone();
            if input.len() >= 2 {
                ensure(rec.below.len() == 2 * n, || format!("swap on #{s} made {} draws", rec.below.len()))?;
                for pair in rec.below.chunks(2) {
                    let i = pair[0];
                    let j = if pair[1] >= i { pair[1] + 1 } else { pair[1] };
                    replay.swap(i, j);
                }
            }
            ensure(rs == replay, || format!("swap replay on #{s} at {t}"))?;
            checks += 5;
        }
        let ex = TokenizedExample::original(input.clone(), 0);
        for kind in AugmentOpKind::ALL {
            if kind == AugmentOpKind::RoundTripTranslation {
                continue;
            }
            let aug = Augmenter::new(kind, Arc::new(lexicon.clone()), Arc::new(vocab.clone())).unwrap();
            let mut r = rng::stream(s as u64, Purpose::Augment, 99);
            let out = aug.augment(&ex, Temperature::ZERO, &mut r);
            ensure(out.tokens == *input, || format!("{kind} at tau 0 changed #{s}"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} positional checks over 1000 sentences"))
}

fn criterion_4() -> Outcome {
    let classes = 10;
    let per_class = 30;
    let dim = 32;
    let mut r = rng::stream(4, Purpose::Init, 0);
    let params = TripletNetParams::init(dim, 200, 40, 0.4, &mut r).unwrap();
    let labels: Vec<usize> = (0..classes * per_class).map(|i| i / per_class).collect();
    let features: Vec<Vec<f64>> = labels
        .iter()
        .map(|_| (0..dim).map(|_| r.unit() * 2.0 - 1.0).collect())
        .collect();
    let refs: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
    let margin = Margin::new(0.4).unwrap();
    let mined = sample_hard_negative_triplets(&labels, &refs, 10_000, &params, margin, 50, &mut r).unwrap();
    let embeds: Vec<Vec<f64>> = features.iter().map(|x| embed_eval(&params, x).unwrap()).collect();
    let mut fallbacks = 0;
    for m in &mined {
        let t = m.triplet;
        let d_ap = cosine_distance(&embeds[t.anchor], &embeds[t.positive]);
        let d_an = cosine_distance(&embeds[t.anchor], &embeds[t.negative]);
        ensure(labels[t.anchor] == labels[t.positive] && labels[t.anchor] != labels[t.negative], || {
            format!("bad labels in {t:?}")
        })?;
        if m.fallback {
            fallbacks += 1;
        } else {
            ensure(d_ap + margin.value() > d_an, || format!("{t:?}: d_ap={d_ap} d_an={d_an}"))?;
        }
    }
    ensure(mined.len() == 10_000, || format!("{} triplets", mined.len()))?;
    Ok(format!(
        "10000 triplets, fallback rate {:.4} ({fallbacks})",
        fallbacks as f64 / mined.len() as f64
    ))
}

fn schedule_totals(s: &Schedule) -> Vec<u64> {
    s.stages.iter().map(|st| st.budget.max_updates()).collect()
}

fn criterion_5() -> Outcome {
    let t5 = tau(0.5);
    let expect = |preset: &str, kind, stages: &[u64]| -> Result<(), String> {
        let s = preset_schedule(kind, preset, t5, 0).map_err(|e| e.to_string())?;
        let got = schedule_totals(&s);
        ensure(got == stages, || format!("{preset} {kind}: {got:?} != {stages:?}"))?;
        ensure(s.total_updates == stages.iter().sum::<u64>(), || format!("{preset} {kind} total"))?;
        let mut start = 0;
        for (i, b) in stages.iter().enumerate() {
            for u in [start, start + b - 1] {
                let (idx, _) = s.stage_at(u).map_err(|e| e.to_string())?;
                ensure(idx == i, || format!("{preset} {kind}: update {u} in stage {idx}, expected {i}"))?;
            }
            start += b;
        }
        ensure(s.stage_at(start).is_err(), || format!("{preset} {kind}: update {start} accepted"))?;
        Ok(())
    };
    use ScheduleKind::*;
    expect("huff", SingleAug, &[15000])?;
    expect("huff", TwoStage, &[4000, 11000])?;
    expect("huff", Gradual, &[6000; 6])?;
    expect("fewrel", TwoStage, &[6000, 9000])?;
    expect("fewrel", Gradual, &[6000; 6])?;
    expect("covc", TwoStage, &[4000, 11000])?;
    expect("covc", Gradual, &[6000, 4000, 4000, 4000, 4000, 4000])?;
    expect("amzn", SingleNoAug, &[25000])?;
    expect("amzn", TwoStage, &[8000, 17000])?;
    expect("amzn", Gradual, &[10000, 8000, 8000, 8000, 8000, 8000])?;
    let amzn = preset_schedule(Gradual, "amzn", t5, 0).unwrap();
    ensure(amzn.total_updates == 50000, || format!("AMZN gradual total {}", amzn.total_updates))?;
    ensure(Preset::Covc.eval_every() == 200 && Preset::Huff.eval_every() == 300, || "eval cadence".into())?;

    let fixed = |s: &Schedule| -> Vec<f64> {
        s.stages
            .iter()
            .map(|st| match st.tau {
                TauRule::Fixed(t) => t.value(),
                TauRule::Control { .. } => f64::NAN,
            })
            .collect()
    };
    let gradual = fixed(&preset_schedule(Gradual, "huff", t5, 0).unwrap());
    ensure(gradual == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], || format!("gradual taus {gradual:?}"))?;
    let anti = fixed(&preset_schedule(Anti, "huff", t5, 0).unwrap());
    ensure(anti == [0.5, 0.4, 0.3, 0.2, 0.1, 0.0], || format!("anti taus {anti:?}"))?;

    let control = preset_schedule(Control, "huff", t5, 17).unwrap();
    let stage = &control.stages[1];
    let mut changes = 0;
    let mut windows = HashSet::new();
    for u in 6000..12000u64 {
        let cur = stage.tau_at(u);
        if u % CONTROL_WINDOW != 0 {
            ensure(cur == stage.tau_at(u - 1), || format!("control tau changed inside window at {u}"))?;
        } else if cur != stage.tau_at(u - 1) {
            changes += 1;
        }
        windows.insert(u / CONTROL_WINDOW);
    }
    ensure(changes > 0, || "control tau never changed".into())?;
    Ok(format!(
        "4 presets exact, taus ok, control redrawn at {changes}/{} window boundaries",
        windows.len() - 1
    ))
}

fn criterion_6() -> Outcome {
    let pool: Vec<TokenizedExample> = (0..40)
        .map(|i| TokenizedExample::original(vec![format!("a{i}"), format!("b{i}"), format!("c{i}")], i % 4))
        .collect();
    let vocab = Vocabulary::from_tokens(pool.iter().flat_map(|e| e.tokens.iter()));
    let aug = Augmenter::new(AugmentOpKind::Switchout, Arc::new(SynonymLexicon::default()), Arc::new(vocab)).unwrap();
    let budgets = ScheduleBudgets {
        single_total: 100,
        two_stage: [50, 50],
        gradual_first: 20,
        gradual_per_stage: 20,
    };
    let mut total_slots = 0usize;
    let mut total_orig = 0usize;
    for kind in [ScheduleKind::SingleAug, ScheduleKind::TwoStage, ScheduleKind::Gradual, ScheduleKind::Control] {
        let s = make_schedule(kind, &budgets, tau(0.5), 5).map_err(|e| e.to_string())?;
        for update in 0..s.total_updates {
            let (_, stage) = s.stage_at(update).unwrap();
            if !stage.augment_enabled {
                continue;
            }
            let bs = [64, 17, 33, 100][update as usize % 4];
            let batch = compose_batch(stage, stage.tau_at(update), &pool, bs, &aug, BatchKey { seed: 5, update })
                .map_err(|e| e.to_string())?;
            let orig = batch.iter().filter(|(_, a)| !a).count();
            let frac = orig as f64 / bs as f64;
            ensure((frac - 0.2).abs() <= 1.0 / bs as f64, || format!("{kind} update {update}: {frac}"))?;
            total_slots += bs;
            total_orig += orig;
        }
    }
    let agg = total_orig as f64 / total_slots as f64;
    ensure(total_slots >= 10_000, || format!("only {total_slots} slots"))?;
    ensure((0.18..=0.22).contains(&agg), || format!("aggregate original fraction {agg}"))?;
    Ok(format!("aggregate original fraction {agg:.4} over {total_slots} slots"))
}

fn brute_force_1nn(params: &TripletNetParams, train: &LabeledFeatures, eval: &LabeledFeatures) -> f64 {
    let tr: Vec<Vec<f64>> = train.features.iter().map(|x| embed_eval(params, x).unwrap()).collect();
    let mut correct = 0;
    for (x, &y) in eval.features.iter().zip(&eval.labels) {
        let q = embed_eval(params, x).unwrap();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, t) in tr.iter().enumerate() {
            let d = cosine_distance(t, &q);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        if train.labels[best] == y {
            correct += 1;
        }
    }
    correct as f64 / eval.labels.len() as f64
}

fn criterion_7() -> Outcome {
    let mut accs = Vec::new();
    for inst in 0..10u64 {
        let mut r = rng::stream(inst, Purpose::Synth, 7);
        let dim = 8 + r.below(24);
        let classes = 2 + r.below(9);
        let n_train = 1 + r.below(500);
        let n_eval = 1 + r.below(200);
        let params = TripletNetParams::init(dim, 16, 8, 0.4, &mut r).unwrap();
        let mut sample = |n: usize| {
            // Coarse grid values make exact duplicates and ties likely.
            let feats: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.below(3) as f64 - 1.0).collect()).collect();
            let labels: Vec<usize> = (0..n).map(|_| r.below(classes)).collect();
            LabeledFeatures::originals(feats, labels).unwrap()
        };
        let train = sample(n_train);
        let eval = sample(n_eval);
        let fast = evaluate_1nn(&params, &train, &eval).map_err(|e| e.to_string())?;
        let slow = brute_force_1nn(&params, &train, &eval);
        ensure(fast == slow, || format!("instance {inst}: {fast} != {slow}"))?;
        accs.push(fast);
    }
    Ok(format!("10 instances identical, accuracies {accs:.3?}"))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let grid = ExperimentGrid {
        data: DataConfig {
            synthetic: Some(SynthConfig::default()),
            n_c: Some(5),
            ..DataConfig::default()
        },
        base: TrainConfig {
            budgets: Some(ScheduleBudgets {
                single_total: 1500,
                two_stage: [400, 1100],
                gradual_first: 600,
                gradual_per_stage: 600,
            }),
            eval_every: Some(50),
            lr: 3e-3,
            tau: tau(0.5),
            encoder: EncoderSpec::default(),
            ..TrainConfig::default()
        },
        schedules: vec![ScheduleKind::SingleNoAug, ScheduleKind::SingleAug, ScheduleKind::Gradual],
        samplers: vec![GridSampler::Random],
        techniques: vec![AugmentOpKind::Eda],
        taus: vec![tau(0.5)],
        n_cs: vec![],
        seeds: 5,
        seed_offset: 0,
    };
    let cells = run_experiment(&grid).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let of = |k: ScheduleKind| -> Result<f64, String> {
        let c = cells.iter().find(|c| c.schedule == k).ok_or(format!("no {k} cell"))?;
        ensure(c.error.is_none() && c.accuracies.len() == 5, || format!("{k}: {:?}", c.error))?;
        Ok(mean(&c.accuracies) * 100.0)
    };
    let noaug = of(ScheduleKind::SingleNoAug)?;
    let standard = of(ScheduleKind::SingleAug)?;
    let gradual = of(ScheduleKind::Gradual)?;
    let summary = format!("no-aug {noaug:.2}%, standard {standard:.2}%, gradual {gradual:.2}% in {elapsed:.1?}");
    ensure(gradual >= standard, || format!("gradual < standard: {summary}"))?;
    ensure(standard >= noaug - 0.5, || format!("standard < no-aug - 0.5: {summary}"))?;
    ensure(gradual >= noaug + 1.0, || format!("gradual < no-aug + 1: {summary}"))?;
    ensure(elapsed < Duration::from_secs(600), || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn small_run() -> (TrainConfig, TrainingData) {
    let synth = SynthConfig {
        classes: 6,
        ..SynthConfig::default()
    };
    let data = DataConfig {
        synthetic: Some(synth),
        n_c: Some(5),
        ..DataConfig::default()
    };
    let cfg = TrainConfig {
        schedule: ScheduleKind::Control,
        budgets: Some(ScheduleBudgets {
            single_total: 120,
            two_stage: [40, 80],
            gradual_first: 20,
            gradual_per_stage: 20,
        }),
        eval_every: Some(10),
        lr: 3e-3,
        hidden: 48,
        embed: 16,
        seed: 11,
        ..TrainConfig::default()
    };
    let prepared = data.prepare(cfg.seed, true).unwrap();
    (cfg, prepared)
}

const RUN_TOML: &str = "[train]\nschedule = \"control\"\nlr = 0.003\neval_every = 10\nhidden = 48\nembed = 16\n\
[train.budgets]\nsingle_total = 120\ntwo_stage = [40, 80]\ngradual_first = 20\ngradual_per_stage = 20\n\
[data]\nn_c = 5\n[data.synthetic]\nclasses = 6\n";

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    std::fs::write(&config, RUN_TOML).map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_tc"))
            .arg("--config")
            .arg(&config)
            .args(["--seed", "11", "train", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        std::fs::read(out.join("metrics.csv")).map_err(|e| e.to_string())
    };
    let a = run("a")?;
    let b = run("b")?;
    ensure(a == b, || "metric CSVs differ".into())?;
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    Ok(format!("two `tc train` runs wrote identical metrics.csv ({} bytes, {rows} lines)", a.len()))
}

fn criterion_10() -> Outcome {
    let (cfg, data) = small_run();
    let full = Trainer::new(cfg.clone(), data.clone())
        .and_then(|mut t| t.run())
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ckpt.json");
    let mut first = Trainer::new(cfg, data.clone()).map_err(|e| e.to_string())?;
    first.run_until(57).map_err(|e| e.to_string())?;
    first.checkpoint().save(&path).map_err(|e| e.to_string())?;
    drop(first);
    let ckpt = tc_core::trainer::Checkpoint::load(&path).map_err(|e| e.to_string())?;
    let mut resumed = Trainer::resume(ckpt, data).map_err(|e| e.to_string())?;
    let rest = resumed.run().map_err(|e| e.to_string())?;
    ensure(rest == full, || "resumed run diverged".into())?;
    Ok(format!("resumed at 57, {} history rows identical", full.history.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", criterion_1),
        ("triplet loss oracle values", criterion_2),
        ("temperature exactness", criterion_3),
        ("mining condition", criterion_4),
        ("schedule fidelity", criterion_5),
        ("mixing ratio", criterion_6),
        ("1-NN oracle equivalence", criterion_7),
        ("desk-scale directional experiment", criterion_8),
        ("determinism", criterion_9),
        ("checkpoint round-trip", criterion_10),
    ];
    let only: Option<usize> = std::env::var("TC_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|k| k != n) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
