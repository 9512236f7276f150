//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//!
//! Oracles here are deliberately naive: exhaustive path enumeration for inference, central
//! differences for gradients, from-scratch AMI for every candidate merge.

use std::collections::{BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nestner::brown::{brown_cluster, collect_counts, ClusterTree, CorpusCounts};
use nestner::corpus::{
    bio_decode, bio_encode, decode_joint, encode_joint, syllable_explode, BioTag, Document,
    EntitySpan, EntityType, JointTag, Sentence,
};
use nestner::crf::{
    log_likelihood_and_gradient, log_partition, marginals, path_score, viterbi_path, CrfModel,
    FeatureAlphabet, Instance, LabelAlphabet, TrainConfig,
};
use nestner::eval::{evaluate_corpus, prf, Bucket, EvalCounts, EvalReport, Mode};
use nestner::features::{FeatureExtractor, FeatureTemplate, SparseFeatureVector};
use nestner::nested::{resolve_conflicts, train_nested, Strategy};
use nestner::preprocess::{build_document, PresegmentedSegmenter};
use nestner::synthetic::{generate_sentences, split, SyntheticConfig};

type Outcome = Result<String, String>;

const INFERENCE_ABS_TOL: f64 = 1e-10;
const GRADIENT_STEP: f64 = 1e-5;
const GRADIENT_REL_TOL: f64 = 1e-6;
const ZERO_WEIGHT_TOL: f64 = 1e-12;
const SYNTHETIC_F1_MIN: f64 = 95.0;
const DIRECTIONAL_SLACK: f64 = 1.0;
const AMI_TOL: f64 = 1e-9;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(spent <= budget, || {
        format!("took {spent:.2?}, budget {budget:?}")
    })
}

fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn all_paths(t_len: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t_len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..l).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

fn score_by_hand(em: &Array2<f64>, tr: &Array2<f64>, path: &[usize]) -> f64 {
    let mut s = 0.0;
    for t in 0..path.len() {
        s += em[[t, path[t]]];
        if t > 0 {
            s += tr[[path[t - 1], path[t]]];
        }
    }
    s
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..=1.0))
}

// ---------------------------------------------------------------------------

fn worked_example_sentence() -> Sentence {
    let body = "ông <ENAMEX TYPE=\"PER\">Ngô_Văn_Quý</ENAMEX> - Phó Chủ_tịch \
                <ENAMEX TYPE=\"ORG\">UBND <ENAMEX TYPE=\"LOC\">TP Hà_Nội</ENAMEX></ENAMEX>";
    let (doc, dropped) =
        build_document("worked-example", body, true, &PresegmentedSegmenter).expect("parses");
    assert!(dropped.is_empty());
    doc.sentences.into_iter().next().expect("one sentence")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = worked_example_sentence();
    let joint: Vec<String> = s
        .joint_tags()
        .map_err(|e| e.to_string())?
        .iter()
        .map(ToString::to_string)
        .collect();
    let expected = [
        "O+O",
        "B-PER+O",
        "O+O",
        "O+O",
        "O+O",
        "O+B-ORG",
        "B-LOC+I-ORG",
        "I-LOC+I-ORG",
    ];
    ensure(joint == expected, || format!("got {joint:?}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("8 joint tags match ({:.1?})", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let t_len = rng.random_range(1..=6);
        let l = rng.random_range(1..=5);
        let em = uniform(&mut rng, t_len, l);
        let tr = uniform(&mut rng, l, l);
        let paths = all_paths(t_len, l);
        let scores: Vec<f64> = paths.iter().map(|p| score_by_hand(&em, &tr, p)).collect();
        let log_z = lse(&scores);

        let got = log_partition(&em, &tr);
        worst = worst.max((got - log_z).abs());
        ensure((got - log_z).abs() <= INFERENCE_ABS_TOL, || {
            format!("trial {trial}: log Z {got} vs brute force {log_z}")
        })?;

        let mut node = Array2::<f64>::zeros((t_len, l));
        let mut edge = Array3::<f64>::zeros((t_len - 1, l, l));
        for (p, s) in paths.iter().zip(&scores) {
            let prob = (s - log_z).exp();
            for t in 0..t_len {
                node[[t, p[t]]] += prob;
                if t > 0 {
                    edge[[t - 1, p[t - 1], p[t]]] += prob;
                }
            }
        }
        let (n, e) = marginals(&em, &tr);
        for (a, b) in n.iter().zip(node.iter()).chain(e.iter().zip(edge.iter())) {
            worst = worst.max((a - b).abs());
            ensure((a - b).abs() <= INFERENCE_ABS_TOL, || {
                format!("trial {trial}: marginal {a} vs brute force {b}")
            })?;
        }

        // exhaustive argmax; the first maximum in lexicographic order wins ties
        let mut best = 0;
        for k in 1..paths.len() {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        let (path, score) = viterbi_path(&em, &tr);
        ensure(path == paths[best], || {
            format!(
                "trial {trial}: viterbi {path:?} vs exhaustive {:?}",
                paths[best]
            )
        })?;
        ensure((score - scores[best]).abs() <= INFERENCE_ABS_TOL, || {
            format!("trial {trial}: viterbi score {score} vs {}", scores[best])
        })?;
        ensure(
            (path_score(&em, &tr, &path) - score).abs() <= INFERENCE_ABS_TOL,
            || format!("trial {trial}: path_score disagrees with viterbi score"),
        )?;
    }
    // tie-break: all-zero potentials decode to label 0 everywhere
    let (path, _) = viterbi_path(&Array2::zeros((4, 3)), &Array2::zeros((3, 3)));
    ensure(path == vec![0; 4], || format!("tie-break gave {path:?}"))?;
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!(
        "200 instances, max abs err {worst:.1e} ({:.1?})",
        start.elapsed()
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (t_len, l, n_feat) = (3, 3, 4);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let instances: Vec<Instance> = (0..2)
            .map(|_| Instance {
                features: (0..t_len)
                    .map(|_| {
                        let mut row = Vec::new();
                        for f in 0..n_feat {
                            if rng.random_bool(0.6) {
                                row.push((f, rng.random_range(-2.0..=2.0)));
                            }
                        }
                        row
                    })
                    .collect(),
                labels: (0..t_len).map(|_| rng.random_range(0..l)).collect(),
            })
            .collect();
        let weights: Vec<f64> = (0..n_feat * l + l * l)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let sigma = (trial % 2 == 1).then(|| rng.random_range(0.5..=2.0));
        let (_, grad) = log_likelihood_and_gradient(&instances, &weights, l, sigma);
        for k in 0..weights.len() {
            let mut plus = weights.clone();
            let mut minus = weights.clone();
            plus[k] += GRADIENT_STEP;
            minus[k] -= GRADIENT_STEP;
            let fp = log_likelihood_and_gradient(&instances, &plus, l, sigma).0;
            let fm = log_likelihood_and_gradient(&instances, &minus, l, sigma).0;
            let numeric = (fp - fm) / (2.0 * GRADIENT_STEP);
            let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1.0);
            worst = worst.max(rel);
            ensure(rel < GRADIENT_REL_TOL, || {
                format!(
                    "trial {trial} weight {k}: analytic {} vs numeric {numeric}",
                    grad[k]
                )
            })?;
        }
    }
    within_budget(start, Duration::from_secs(5))?;
    Ok(format!(
        "50 trials, max rel err {worst:.1e} ({:.1?})",
        start.elapsed()
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let t_len = rng.random_range(1..=12);
        let l = rng.random_range(1..=9);
        let labels: LabelAlphabet = (0..l).map(|i| format!("L{i}")).collect();
        let features: FeatureAlphabet = ["a", "b", "c"].into_iter().collect();
        let model = CrfModel::zeros(labels, features, "fp");
        let sentence: Vec<SparseFeatureVector> = (0..t_len)
            .map(|_| {
                [("a".to_string(), rng.random_range(-3.0..3.0))]
                    .into_iter()
                    .collect()
            })
            .collect();
        let (em, tr) = nestner::crf::compute_potentials(&sentence, &model);
        let expected = t_len as f64 * (l as f64).ln();
        let got = log_partition(&em, &tr);
        worst = worst.max((got - expected).abs());
        ensure((got - expected).abs() <= ZERO_WEIGHT_TOL, || {
            format!("trial {trial}: log Z {got} vs T ln L {expected}")
        })?;
        let (node, edge) = marginals(&em, &tr);
        let (u1, u2) = (1.0 / l as f64, 1.0 / (l * l) as f64);
        ensure(
            node.iter().all(|v| (v - u1).abs() <= ZERO_WEIGHT_TOL),
            || format!("trial {trial}: node marginals not uniform"),
        )?;
        ensure(
            edge.iter().all(|v| (v - u2).abs() <= ZERO_WEIGHT_TOL),
            || format!("trial {trial}: edge marginals not uniform"),
        )?;
    }
    Ok(format!("200 shapes, max |log Z - T ln L| {worst:.1e}"))
}

// ---------------------------------------------------------------------------

fn random_type(rng: &mut ChaCha8Rng) -> EntityType {
    EntityType::ALL[rng.random_range(0..4)]
}

fn random_tag(rng: &mut ChaCha8Rng) -> BioTag {
    match rng.random_range(0..3) {
        0 => BioTag::O,
        1 => BioTag::B(random_type(rng)),
        _ => BioTag::I(random_type(rng)),
    }
}

fn random_disjoint_spans(rng: &mut ChaCha8Rng, n: usize, level: u8) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.random_bool(0.4) {
            let len = rng.random_range(1..=(n - i).min(4));
            spans.push(EntitySpan::new(random_type(rng), i, i + len, level));
            i += len;
        } else {
            i += 1;
        }
    }
    spans
}

fn random_model(rng: &mut ChaCha8Rng) -> CrfModel {
    let mut labels = vec!["O".to_string()];
    for t in EntityType::ALL.iter().take(rng.random_range(1..=4)) {
        labels.push(format!("B-{t}"));
        labels.push(format!("I-{t}"));
    }
    let n_feat = rng.random_range(1..=8);
    let features: FeatureAlphabet = (0..n_feat).map(|f| format!("w[0]=f{f}")).collect();
    let mut model = CrfModel::zeros(labels.into_iter().collect(), features, "fp");
    for w in model.weights_mut() {
        if rng.random_bool(0.7) {
            *w = rng.random_range(-5.0..5.0);
        }
    }
    model
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let n = rng.random_range(0..=20);
        let spans = random_disjoint_spans(&mut rng, n, 1);
        let tags = bio_encode(&spans, n).map_err(|e| e.to_string())?;
        let repair = rng.random_bool(0.5);
        let back = bio_decode(&tags, repair, 1).map_err(|e| e.to_string())?;
        ensure(back == spans, || {
            format!("bio trial {trial}: {spans:?} -> {back:?}")
        })?;
    }
    for trial in 0..1000 {
        let n = rng.random_range(0..=20);
        let a: Vec<BioTag> = (0..n).map(|_| random_tag(&mut rng)).collect();
        let b: Vec<BioTag> = (0..n).map(|_| random_tag(&mut rng)).collect();
        let joint = encode_joint(&a, &b).map_err(|e| e.to_string())?;
        let rendered: Vec<JointTag> = joint
            .iter()
            .map(|j| j.to_string().parse().expect("renders parse"))
            .collect();
        ensure(rendered == joint, || {
            format!("joint trial {trial}: render/parse mismatch")
        })?;
        ensure(decode_joint(&joint) == (a, b), || {
            format!("joint trial {trial}: decode mismatch")
        })?;
    }
    let syllable_pool = ["Hà", "Nội", "ông", "Ngô", "Văn", "Quý", "TP", "-", "UBND"];
    for trial in 0..1000 {
        let n = rng.random_range(1..=10);
        let words: Vec<String> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..=3);
                (0..k)
                    .map(|_| syllable_pool[rng.random_range(0..syllable_pool.len())])
                    .collect::<Vec<_>>()
                    .join("_")
            })
            .collect();
        let sentence = Sentence::from_surfaces(&words);
        let spans = random_disjoint_spans(&mut rng, n, 1);
        let tags = bio_encode(&spans, n).map_err(|e| e.to_string())?;
        let (syl, syl_tags) =
            syllable_explode(&sentence.tokens, &tags).map_err(|e| e.to_string())?;
        let mut offsets = vec![0];
        for w in &words {
            offsets.push(offsets.last().unwrap() + w.split('_').count());
        }
        ensure(syl.len() == offsets[n], || {
            format!("syllable trial {trial}: wrong length")
        })?;
        let expected: Vec<EntitySpan> = spans
            .iter()
            .map(|s| {
                EntitySpan::new(
                    s.entity_type,
                    offsets[s.token_start],
                    offsets[s.token_end],
                    1,
                )
            })
            .collect();
        let got = bio_decode(&syl_tags, false, 1).map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("syllable trial {trial}: {expected:?} vs {got:?}")
        })?;
    }
    for trial in 0..1000 {
        let model = random_model(&mut rng);
        let mut buf = Vec::new();
        model.save(&mut buf).map_err(|e| e.to_string())?;
        let loaded = CrfModel::load(buf.as_slice()).map_err(|e| e.to_string())?;
        let n_feat = model.features().len();
        let sentence: Vec<SparseFeatureVector> = (0..rng.random_range(1..=8))
            .map(|_| {
                (0..n_feat)
                    .filter(|_| rng.random_bool(0.5))
                    .map(|f| (format!("w[0]=f{f}"), 1.0))
                    .collect()
            })
            .collect();
        ensure(
            loaded.viterbi(&sentence) == model.viterbi(&sentence),
            || format!("save/load trial {trial}: predictions differ"),
        )?;
        let labels = model.labels().labels();
        let same_weights = (0..n_feat).all(|f| {
            let name = model.features().name(f);
            labels
                .iter()
                .all(|y| loaded.emission_weight(name, y) == model.emission_weight(name, y))
        }) && labels.iter().all(|p| {
            labels
                .iter()
                .all(|y| loaded.transition_weight(p, y) == model.transition_weight(p, y))
        }) && loaded.labels() == model.labels()
            && loaded.template_fingerprint() == model.template_fingerprint();
        ensure(same_weights, || {
            format!("save/load trial {trial}: weights differ")
        })?;
    }
    Ok("4 × 1000 trials, 0 failures".into())
}

// ---------------------------------------------------------------------------

fn heldout_report(
    train: &[Sentence],
    test: &[Sentence],
    strategy: Strategy,
    mode: Mode,
) -> Result<EvalReport, String> {
    let extractor =
        FeatureExtractor::new(FeatureTemplate::default(), None, None).map_err(|e| e.to_string())?;
    let model = train_nested(train, strategy, &extractor, &TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let predicted = model
        .predict_corpus(&extractor, test)
        .map_err(|e| e.to_string())?;
    let doc = |sentences: Vec<Sentence>| Document {
        id: "heldout".into(),
        sentences,
    };
    evaluate_corpus(&[doc(test.to_vec())], &[doc(predicted)], mode, false)
        .map_err(|e| e.to_string())
}

fn f1_on_heldout(
    train: &[Sentence],
    test: &[Sentence],
    strategy: Strategy,
    mode: Mode,
) -> Result<f64, String> {
    Ok(heldout_report(train, test, strategy, mode)?.overall().f1)
}

fn add_report(pool: &mut EvalCounts, report: &EvalReport) {
    for t in EntityType::ALL {
        let row = report.row(t.as_str()).expect("every type has a row");
        let b = pool.get_mut(t);
        b.gold += row.counts.gold;
        b.predicted += row.counts.predicted;
        b.correct += row.counts.correct;
    }
}

fn criterion_6() -> Outcome {
    let sentences = generate_sentences(&SyntheticConfig::default());
    ensure(sentences.len() >= 500, || {
        "generator produced too few sentences".into()
    })?;
    let (train, test) = split(&sentences, 0.8);

    let start = Instant::now();
    let joint = f1_on_heldout(&train, &test, Strategy::Joint, Mode::AllLevels)?;
    let joint_time = start.elapsed();
    within_budget(start, Duration::from_secs(120))?;

    let start = Instant::now();
    let separated = f1_on_heldout(&train, &test, Strategy::Separated, Mode::Level1)?;
    let separated_time = start.elapsed();
    within_budget(start, Duration::from_secs(120))?;

    ensure(joint >= SYNTHETIC_F1_MIN, || {
        format!("joint all-levels F1 {joint:.2}")
    })?;
    ensure(separated >= SYNTHETIC_F1_MIN, || {
        format!("separated level-1 F1 {separated:.2}")
    })?;
    Ok(format!(
        "joint all-levels F1 {joint:.2} ({joint_time:.1?}), separated level-1 F1 {separated:.2} ({separated_time:.1?})"
    ))
}

// Five independent corpora of the default size, each trained and scored separately; counts are
// pooled so a single held-out error does not decide the comparison.
fn criterion_7() -> Outcome {
    let mut joint = EvalCounts::default();
    let mut separated = EvalCounts::default();
    for seed in 1..=5 {
        let config = SyntheticConfig {
            context_dependent: true,
            seed,
            ..SyntheticConfig::default()
        };
        let sentences = generate_sentences(&config);
        let (train, test) = split(&sentences, 0.8);
        add_report(
            &mut joint,
            &heldout_report(&train, &test, Strategy::Joint, Mode::Level2)?,
        );
        add_report(
            &mut separated,
            &heldout_report(&train, &test, Strategy::Separated, Mode::Level2)?,
        );
    }
    let (j, s) = (prf(&joint).overall().f1, prf(&separated).overall().f1);
    let detail = format!(
        "pooled level-2 F1 joint {j:.2} vs separated {s:.2} over {} gold entities",
        joint.total().gold
    );
    ensure(j >= s - DIRECTIONAL_SLACK, || {
        format!("{detail}; joint trails by more than {DIRECTIONAL_SLACK}")
    })?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

/// AMI of a clustering of the active words, computed from scratch.
fn brute_ami(counts: &CorpusCounts, active: &[bool], clusters: &[Vec<usize>]) -> f64 {
    let n = counts.bigrams.values().sum::<u64>() as f64;
    let mut of = HashMap::new();
    for (c, members) in clusters.iter().enumerate() {
        for &w in members {
            of.insert(w, c);
        }
    }
    let k = clusters.len();
    let mut joint = vec![vec![0.0; k]; k];
    for (&(a, b), &c) in &counts.bigrams {
        if active[a] && active[b] {
            joint[of[&a]][of[&b]] += c as f64;
        }
    }
    let left: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let right: Vec<f64> = (0..k).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut ami = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = joint[i][j];
            if c > 0.0 {
                ami += c / n * (c * n / (left[i] * right[j])).ln();
            }
        }
    }
    ami
}

/// Replays the merge history and checks each merge against every alternative.
fn check_merges(counts: &CorpusCounts, tree: &ClusterTree, m: usize) -> Result<(), String> {
    let v = counts.vocab.len();
    let mut members: Vec<Vec<usize>> = (0..v).map(|w| vec![w]).collect();
    let mut active_nodes: Vec<usize> = (0..v.min(m)).collect();
    let mut active: Vec<bool> = (0..v).map(|w| w < m).collect();
    for (step, merge) in tree.merges.iter().enumerate() {
        let incoming = m + step;
        if incoming < v {
            active[incoming] = true;
            active_nodes.push(incoming);
        }
        let clusters: Vec<Vec<usize>> = active_nodes.iter().map(|&n| members[n].clone()).collect();
        let before = brute_ami(counts, &active, &clusters);
        let mut best = f64::INFINITY;
        let mut chosen = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut merged: Vec<Vec<usize>> = Vec::new();
                for (i, c) in clusters.iter().enumerate() {
                    if i == a {
                        merged.push(c.iter().chain(&clusters[b]).copied().collect());
                    } else if i != b {
                        merged.push(c.clone());
                    }
                }
                let loss = before - brute_ami(counts, &active, &merged);
                best = best.min(loss);
                if (active_nodes[a], active_nodes[b]) == (merge.left, merge.right) {
                    chosen = Some(loss);
                }
            }
        }
        let chosen =
            chosen.ok_or_else(|| format!("merge {step}: pair is not two active clusters"))?;
        ensure((chosen - merge.loss).abs() <= AMI_TOL, || {
            format!(
                "merge {step}: recorded loss {} vs recomputed {chosen}",
                merge.loss
            )
        })?;
        ensure(chosen <= best + AMI_TOL, || {
            format!("merge {step}: loss {chosen} but best available {best}")
        })?;
        ensure((merge.ami_before - before).abs() <= AMI_TOL, || {
            format!("merge {step}: ami_before")
        })?;

        let node = v + step;
        let joined: Vec<usize> = members[merge.left]
            .iter()
            .chain(&members[merge.right])
            .copied()
            .collect();
        members.push(joined);
        let pos_l = active_nodes.iter().position(|&x| x == merge.left).unwrap();
        active_nodes[pos_l] = node;
        active_nodes.retain(|&x| x != merge.right);
    }
    ensure(active_nodes.len() == 1, || {
        "merges do not end in a single root".into()
    })
}

fn check_prefix_code(tree: &ClusterTree) -> Result<(), String> {
    let paths: BTreeSet<&str> = tree.paths.iter().map(String::as_str).collect();
    ensure(paths.len() == tree.paths.len(), || {
        "duplicate bit-strings".into()
    })?;
    for a in &paths {
        ensure(a.bytes().all(|b| b == b'0' || b == b'1'), || {
            format!("`{a}` is not binary")
        })?;
        for b in &paths {
            ensure(a == b || !b.starts_with(a), || {
                format!("`{a}` is a prefix of `{b}`")
            })?;
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut corpora = 0;
    for _ in 0..40 {
        let vocab = rng.random_range(2..=12);
        let lines: Vec<Vec<String>> = (0..rng.random_range(1..=6))
            .map(|_| {
                (0..rng.random_range(2..=15))
                    .map(|_| format!("w{}", rng.random_range(0..vocab)))
                    .collect()
            })
            .collect();
        let counts = collect_counts(&lines, 1).map_err(|e| e.to_string())?;
        if counts.vocab.len() < 2 {
            continue;
        }
        let m = rng.random_range(2..=counts.vocab.len().max(2));
        let tree = brown_cluster(&counts, m).map_err(|e| e.to_string())?;
        check_merges(&counts, &tree, m)?;
        check_prefix_code(&tree)?;
        corpora += 1;
    }

    let lines: Vec<Vec<&str>> = vec![
        "a x b x a x b x".split(' ').collect(),
        "c y d y c y d y".split(' ').collect(),
    ];
    let counts = collect_counts(&lines, 1).map_err(|e| e.to_string())?;
    // m=2 admits only x and y before the content words arrive, and x/y merge at zero loss;
    // the families can only separate once the window holds all four content words.
    let narrow = brown_cluster(&counts, 2).map_err(|e| e.to_string())?;
    check_merges(&counts, &narrow, 2)?;
    check_prefix_code(&narrow)?;
    let tree = brown_cluster(&counts, 4).map_err(|e| e.to_string())?;
    check_merges(&counts, &tree, 4)?;
    check_prefix_code(&tree)?;
    let first = |w: &str| tree.path_of(w).and_then(|p| p.chars().next());
    let fam1: BTreeSet<_> = ["a", "b"].iter().map(|w| first(w)).collect();
    let fam2: BTreeSet<_> = ["c", "d"].iter().map(|w| first(w)).collect();
    ensure(fam1.len() == 1 && fam2.len() == 1 && fam1 != fam2, || {
        format!("families not split at the first bit: {:?}", tree.paths)
    })?;
    within_budget(start, Duration::from_secs(5))?;
    Ok(format!(
        "{corpora} random corpora + two-family corpus at m=2 and m=4, families split at m=4 ({:.1?})",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------

const HEADER: &str = "type      gold    pred  correct  precision   recall       f1\n";

fn golden(rows: &[&str], scores: &[&str]) -> String {
    let mut s = HEADER.to_string();
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s.push_str("[scores]\n");
    for r in scores {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn score_block(
    label: &str,
    g: usize,
    p: usize,
    c: usize,
    pr: &str,
    rc: &str,
    f1: &str,
) -> Vec<String> {
    vec![
        format!("{label}.gold={g}"),
        format!("{label}.predicted={p}"),
        format!("{label}.correct={c}"),
        format!("{label}.precision={pr}"),
        format!("{label}.recall={rc}"),
        format!("{label}.f1={f1}"),
    ]
}

fn zero_rows(labels: &[&str]) -> Vec<String> {
    labels
        .iter()
        .flat_map(|l| score_block(l, 0, 0, 0, "0.00", "0.00", "0.00"))
        .collect()
}

fn criterion_9() -> Outcome {
    // correct=1, predicted=2, gold=3 on PER
    let mut counts = EvalCounts::default();
    *counts.get_mut(EntityType::Per) = Bucket {
        gold: 3,
        predicted: 2,
        correct: 1,
    };
    let mut scores = score_block("PER", 3, 2, 1, "50.00", "33.33", "40.00");
    scores.extend(zero_rows(&["LOC", "ORG", "MISC"]));
    scores.extend(score_block("All", 3, 2, 1, "50.00", "33.33", "40.00"));
    let scores: Vec<&str> = scores.iter().map(String::as_str).collect();
    let expected = golden(
        &[
            "PER          3       2        1      50.00    33.33    40.00",
            "LOC          0       0        0       0.00     0.00     0.00",
            "ORG          0       0        0       0.00     0.00     0.00",
            "MISC         0       0        0       0.00     0.00     0.00",
            "All          3       2        1      50.00    33.33    40.00",
        ],
        &scores,
    );
    let got = prf(&counts).render();
    ensure(got == expected, || {
        format!("arithmetic fixture:\n{got}\nexpected:\n{expected}")
    })?;

    // worked example sentence; the prediction misses the level-2 ORG
    let gold_sentence = worked_example_sentence();
    let mut pred_sentence = gold_sentence.clone();
    pred_sentence.entities.retain(|e| e.level == 1);
    let doc = |s: Sentence| Document {
        id: "worked-example".into(),
        sentences: vec![s],
    };
    let report = evaluate_corpus(
        &[doc(gold_sentence.clone())],
        &[doc(pred_sentence)],
        Mode::AllLevels,
        false,
    )
    .map_err(|e| e.to_string())?;
    let mut scores = score_block("PER", 1, 1, 1, "100.00", "100.00", "100.00");
    scores.extend(score_block("LOC", 1, 1, 1, "100.00", "100.00", "100.00"));
    scores.extend(score_block("ORG", 1, 0, 0, "0.00", "0.00", "0.00"));
    scores.extend(zero_rows(&["MISC"]));
    scores.extend(score_block("All", 3, 2, 2, "100.00", "66.67", "80.00"));
    let scores: Vec<&str> = scores.iter().map(String::as_str).collect();
    let expected = golden(
        &[
            "PER          1       1        1     100.00   100.00   100.00",
            "LOC          1       1        1     100.00   100.00   100.00",
            "ORG          1       0        0       0.00     0.00     0.00",
            "MISC         0       0        0       0.00     0.00     0.00",
            "All          3       2        2     100.00    66.67    80.00",
        ],
        &scores,
    );
    let got = report.render();
    ensure(got == expected, || {
        format!("missing-ORG fixture:\n{got}\nexpected:\n{expected}")
    })?;

    let perfect = evaluate_corpus(
        &[doc(gold_sentence.clone())],
        &[doc(gold_sentence)],
        Mode::AllLevels,
        false,
    )
    .map_err(|e| e.to_string())?;
    let all = perfect.overall();
    ensure(all.counts.gold == 3 && all.f1 == 100.0, || {
        "perfect prediction is not 100".into()
    })?;

    // "Hà_Nội" against "Hà" "Nội", both LOC, compared on syllables
    let mut gold = Sentence::from_surfaces(&["ở", "Hà_Nội"]);
    gold.entities = vec![EntitySpan::new(EntityType::Loc, 1, 2, 1)];
    let mut pred = Sentence::from_surfaces(&["ở", "Hà", "Nội"]);
    pred.entities = vec![EntitySpan::new(EntityType::Loc, 1, 3, 1)];
    let report = evaluate_corpus(
        &[doc(gold.clone())],
        &[doc(pred.clone())],
        Mode::Level1,
        true,
    )
    .map_err(|e| e.to_string())?;
    let mut scores = zero_rows(&["PER"]);
    scores.extend(score_block("LOC", 1, 1, 1, "100.00", "100.00", "100.00"));
    scores.extend(zero_rows(&["ORG", "MISC"]));
    scores.extend(score_block("All", 1, 1, 1, "100.00", "100.00", "100.00"));
    let scores: Vec<&str> = scores.iter().map(String::as_str).collect();
    let expected = golden(
        &[
            "PER          0       0        0       0.00     0.00     0.00",
            "LOC          1       1        1     100.00   100.00   100.00",
            "ORG          0       0        0       0.00     0.00     0.00",
            "MISC         0       0        0       0.00     0.00     0.00",
            "All          1       1        1     100.00   100.00   100.00",
        ],
        &scores,
    );
    let got = report.render();
    ensure(got == expected, || {
        format!("syllable fixture:\n{got}\nexpected:\n{expected}")
    })?;
    ensure(
        evaluate_corpus(&[doc(gold)], &[doc(pred)], Mode::Level1, false).is_err(),
        || "word-level comparison of differently segmented sentences should not align".into(),
    )?;
    Ok("3 golden reports byte-identical".into())
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let random_spans = |rng: &mut ChaCha8Rng, level: u8| -> Vec<EntitySpan> {
        (0..rng.random_range(0..6))
            .map(|_| {
                let a = rng.random_range(0..12);
                let b = rng.random_range(a + 1..=13);
                EntitySpan::new(random_type(rng), a, b, level)
            })
            .collect()
    };
    let mut dropped = 0;
    for trial in 0..1000 {
        let l1 = random_spans(&mut rng, 1);
        let l2 = random_spans(&mut rng, 2);
        let (out1, out2) = resolve_conflicts(&l1, &l2);
        ensure(out1 == l1, || {
            format!("trial {trial}: level-1 spans changed")
        })?;
        for s in &out2 {
            ensure(
                !l1.iter()
                    .any(|p| p.token_start <= s.token_start && s.token_end <= p.token_end),
                || format!("trial {trial}: {s:?} left inside a level-1 span"),
            )?;
        }
        let survivors: Vec<EntitySpan> = l2
            .iter()
            .filter(|s| {
                !l1.iter()
                    .any(|p| p.token_start <= s.token_start && s.token_end <= p.token_end)
            })
            .copied()
            .collect();
        ensure(out2 == survivors, || {
            format!("trial {trial}: uncontained level-2 span removed")
        })?;
        dropped += l2.len() - out2.len();
    }
    Ok(format!(
        "1000 trials, {dropped} contained level-2 spans removed"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked example joint tags", criterion_1),
        ("inference vs exhaustive enumeration", criterion_2),
        ("gradient vs central differences", criterion_3),
        ("zero-weight partition and marginals", criterion_4),
        ("codec round-trip laws", criterion_5),
        ("synthetic end-to-end F1", criterion_6),
        ("joint vs separated on level 2", criterion_7),
        ("brown merges vs exhaustive AMI", criterion_8),
        ("evaluator golden reports", criterion_9),
        ("level conflict resolution", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
