use crate::corpus::{SynonymLexicon, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::{choose_distinct, Draw};

use super::{num_perturbed, AugmentOpKind, Temperature};

/// The four operators EDA picks from, in selection-index order.
pub const EDA_OPS: [AugmentOpKind; 4] = [
    AugmentOpKind::SynonymReplacement,
    AugmentOpKind::RandomInsertion,
    AugmentOpKind::RandomSwap,
    AugmentOpKind::RandomDeletion,
];

/// Replaces up to `n` distinct lexicon-covered tokens with a random synonym.
pub fn synonym_replacement<D: Draw + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    rng: &mut D,
) -> Vec<String> {
    let eligible: Vec<usize> = (0..tokens.len())
        .filter(|&i| lexicon.contains(&tokens[i]))
        .collect();
    let mut out = tokens.to_vec();
    for k in choose_distinct(rng, eligible.len(), n) {
        let pos = eligible[k];
        let syns = lexicon.get(&tokens[pos]).expect("eligible token has synonyms");
        out[pos] = syns[rng.below(syns.len())].clone();
    }
    out
}

/// Inserts a synonym of a random covered token at a random position, `n`
/// times. Stops early when nothing in the sentence is covered.
pub fn random_insertion<D: Draw + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    rng: &mut D,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..n {
        let eligible: Vec<usize> = (0..out.len())
            .filter(|&i| lexicon.contains(&out[i]))
            .collect();
        if eligible.is_empty() {
            break;
        }
        let src = eligible[rng.below(eligible.len())];
        let syns = lexicon.get(&out[src]).expect("eligible token has synonyms");
        let word = syns[rng.below(syns.len())].clone();
        let at = rng.below(out.len() + 1);
        out.insert(at, word);
    }
    out
}

/// Exchanges two distinct random positions, `n` times.
pub fn random_swap<D: Draw + ?Sized>(tokens: &[String], n: usize, rng: &mut D) -> Vec<String> {
    let mut out = tokens.to_vec();
    let len = out.len();
    if len < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.below(len);
        let mut j = rng.below(len - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

fn drop_each<D: Draw + ?Sized>(tokens: &[String], p: f64, rng: &mut D) -> Vec<String> {
    if p == 0.0 || tokens.is_empty() {
        return tokens.to_vec();
    }
    let kept: Vec<String> = tokens
        .iter()
        .filter(|_| rng.unit() >= p)
        .cloned()
        .collect();
    if kept.is_empty() {
        vec![tokens[rng.below(tokens.len())].clone()]
    } else {
        kept
    }
}

/// Deletes each token with probability `τ`; never returns an empty sentence.
pub fn random_deletion<D: Draw + ?Sized>(tokens: &[String], tau: Temperature, rng: &mut D) -> Vec<String> {
    drop_each(tokens, tau.value(), rng)
}

/// Word-level dropout with a fixed probability `p` in `[0, 1)`.
pub fn pervasive_dropout<D: Draw + ?Sized>(tokens: &[String], p: f64, rng: &mut D) -> Result<Vec<String>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("dropout probability {p} not in [0, 1)")));
    }
    Ok(drop_each(tokens, p, rng))
}

/// Replaces `num_perturbed(τ, len)` distinct positions with uniform
/// vocabulary draws.
pub fn switchout<D: Draw + ?Sized>(
    tokens: &[String],
    tau: Temperature,
    vocab: &Vocabulary,
    rng: &mut D,
) -> Result<Vec<String>> {
    if vocab.is_empty() {
        return Err(Error::invalid("switchout needs a non-empty vocabulary"));
    }
    let mut out = tokens.to_vec();
    for pos in choose_distinct(rng, tokens.len(), num_perturbed(tau, tokens.len())) {
        out[pos] = vocab.tokens()[rng.below(vocab.len())].clone();
    }
    Ok(out)
}

/// Synonym replacement with its count set by temperature.
pub fn token_substitution<D: Draw + ?Sized>(
    tokens: &[String],
    tau: Temperature,
    lexicon: &SynonymLexicon,
    rng: &mut D,
) -> Vec<String> {
    synonym_replacement(tokens, num_perturbed(tau, tokens.len()), lexicon, rng)
}

/// The EDA operator selection draw.
pub fn pick_eda_op<D: Draw + ?Sized>(rng: &mut D) -> AugmentOpKind {
    EDA_OPS[rng.below(EDA_OPS.len())]
}

/// Applies one EDA operator at temperature `τ`.
pub fn apply_eda_op<D: Draw + ?Sized>(
    op: AugmentOpKind,
    tokens: &[String],
    tau: Temperature,
    lexicon: &SynonymLexicon,
    rng: &mut D,
) -> Vec<String> {
    let n = num_perturbed(tau, tokens.len());
    match op {
        AugmentOpKind::SynonymReplacement => synonym_replacement(tokens, n, lexicon, rng),
        AugmentOpKind::RandomInsertion => random_insertion(tokens, n, lexicon, rng),
        AugmentOpKind::RandomSwap => random_swap(tokens, n, rng),
        AugmentOpKind::RandomDeletion => random_deletion(tokens, tau, rng),
        other => panic!("{other} is not an EDA operator"),
    }
}

/// One uniformly chosen EDA operator per call.
pub fn eda<D: Draw + ?Sized>(
    tokens: &[String],
    tau: Temperature,
    lexicon: &SynonymLexicon,
    rng: &mut D,
) -> Vec<String> {
    if tau.is_zero() {
        return tokens.to_vec();
    }
    let op = pick_eda_op(rng);
    apply_eda_op(op, tokens, tau, lexicon, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::testing::Scripted;
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn tau(v: f64) -> Temperature {
        Temperature::new(v).unwrap()
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    #[test]
    fn synonym_replacement_cases() {
        let lex = SynonymLexicon::from_entries([("happy", ["glad"])]);
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(
            synonym_replacement(&toks(&["happy", "cat"]), 1, &lex, &mut rng),
            toks(&["glad", "cat"])
        );
        let empty = SynonymLexicon::default();
        assert_eq!(synonym_replacement(&toks(&["x", "y"]), 2, &empty, &mut rng), toks(&["x", "y"]));
    }

    #[test]
    fn synonym_replacement_saturates_at_eligible_count() {
        let lex = SynonymLexicon::from_entries([("happy", ["glad"]), ("glad", ["happy"])]);
        let input = toks(&["happy", "glad"]);
        // Oracle: enumerate eligible positions; min(5, 2) of them change.
        let eligible = input.iter().filter(|t| lex.contains(t)).count();
        assert_eq!(eligible.min(5), 2);
        for seed in 0..20 {
            let mut rng = stream(seed, Purpose::Augment, 0);
            let out = synonym_replacement(&input, 5, &lex, &mut rng);
            assert_eq!(out, toks(&["glad", "happy"]));
        }
    }

    #[test]
    fn random_insertion_cases() {
        let lex = SynonymLexicon::from_entries([("happy", ["glad"])]);
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(random_insertion(&toks(&["happy"]), 0, &lex, &mut rng), toks(&["happy"]));
        // eligible pick, synonym pick, insert position
        let mut forced = Scripted::new(&[0, 0, 0], &[]);
        assert_eq!(
            random_insertion(&toks(&["happy"]), 1, &lex, &mut forced),
            toks(&["glad", "happy"])
        );
        let empty = SynonymLexicon::default();
        assert_eq!(random_insertion(&toks(&["x"]), 3, &empty, &mut rng), toks(&["x"]));
    }

    #[test]
    fn random_swap_cases() {
        let mut forced = Scripted::new(&[0, 1], &[]);
        assert_eq!(
            random_swap(&toks(&["a", "b", "c"]), 1, &mut forced),
            toks(&["c", "b", "a"])
        );
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(random_swap(&toks(&["a"]), 5, &mut rng), toks(&["a"]));
    }

    #[test]
    fn random_deletion_cases() {
        let input = toks(&["a", "b", "c", "d"]);
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(random_deletion(&input, Temperature::ZERO, &mut rng), input);
        for seed in 0..50 {
            let mut rng = stream(seed, Purpose::Augment, 0);
            let out = random_deletion(&input, tau(1.0), &mut rng);
            assert_eq!(out.len(), 1);
            assert!(input.contains(&out[0]));
        }
    }

    // Binomial oracle: surviving length ~ Bin(1000, 0.9), mean 900, sd 9.49;
    // the mean of 200 runs has sd 0.67, far inside [885, 915].
    #[test]
    fn deletion_and_dropout_survival_rate() {
        let input: Vec<String> = (0..1000).map(|i| format!("t{i}")).collect();
        let mut del = 0usize;
        let mut drop = 0usize;
        for seed in 0..200 {
            let mut rng = stream(seed, Purpose::Augment, 0);
            del += random_deletion(&input, tau(0.1), &mut rng).len();
            let mut rng = stream(seed, Purpose::Augment, 1);
            drop += pervasive_dropout(&input, 0.1, &mut rng).unwrap().len();
        }
        let del = del as f64 / 200.0;
        let drop = drop as f64 / 200.0;
        assert!((885.0..=915.0).contains(&del), "{del}");
        assert!((885.0..=915.0).contains(&drop), "{drop}");
    }

    #[test]
    fn pervasive_dropout_cases() {
        let input = toks(&["a", "b", "c"]);
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(pervasive_dropout(&input, 0.0, &mut rng).unwrap(), input);
        for p in [0.1, 0.5, 0.99] {
            assert_eq!(pervasive_dropout(&toks(&["x"]), p, &mut rng).unwrap(), toks(&["x"]));
        }
        assert!(pervasive_dropout(&input, 1.0, &mut rng).is_err());
    }

    #[test]
    fn switchout_cases() {
        let mut rng = stream(3, Purpose::Augment, 0);
        let vocab = Vocabulary::from_tokens(["z"]);
        let input = toks(&["a", "b"]);
        assert_eq!(switchout(&input, Temperature::ZERO, &vocab, &mut rng).unwrap(), input);
        assert_eq!(switchout(&input, tau(1.0), &vocab, &mut rng).unwrap(), toks(&["z", "z"]));
        assert!(switchout(&input, tau(0.5), &Vocabulary::default(), &mut rng).is_err());

        // Disjoint-vocabulary oracle: every replaced position must differ.
        let input: Vec<String> = (0..8).map(|i| format!("in{i}")).collect();
        let vocab = Vocabulary::from_tokens((0..30).map(|i| format!("v{i}")));
        for seed in 0..50 {
            let mut rng = stream(seed, Purpose::Augment, 0);
            let out = switchout(&input, tau(0.5), &vocab, &mut rng).unwrap();
            let diff = out.iter().zip(&input).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 4);
        }
    }

    #[test]
    fn eda_forced_swap_does_two_swaps() {
        let input: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let lex = SynonymLexicon::default();
        // op index 2 = random_swap, then two (i, j) draws.
        let mut forced = Scripted::new(&[2, 0, 0, 3, 3], &[]);
        let out = eda(&input, tau(0.2), &lex, &mut forced);
        assert_eq!(forced.consumed, 5);
        let mut expect = input.clone();
        expect.swap(0, 1);
        expect.swap(3, 4);
        assert_eq!(out, expect);
    }

    // Uniform multinomial oracle: 4000 draws, p = 1/4, mean 1000, sd 27.4.
    #[test]
    fn eda_selects_ops_uniformly() {
        let lex = SynonymLexicon::from_entries([("w1", ["v1"])]);
        let input = toks(&["w1", "w2", "w3", "w4"]);
        let mut counts = [0usize; 4];
        for id in 0..4000 {
            let mut probe = stream(11, Purpose::Augment, id);
            let op = pick_eda_op(&mut probe);
            let expect = apply_eda_op(op, &input, tau(0.3), &lex, &mut probe);
            let mut rng = stream(11, Purpose::Augment, id);
            assert_eq!(eda(&input, tau(0.3), &lex, &mut rng), expect);
            counts[EDA_OPS.iter().position(|&k| k == op).unwrap()] += 1;
        }
        for c in counts {
            assert!((900..=1100).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn token_substitution_matches_synonym_replacement() {
        let lex = SynonymLexicon::from_entries([("happy", ["glad"])]);
        let mut rng = stream(3, Purpose::Augment, 0);
        assert_eq!(
            token_substitution(&toks(&["happy", "cat"]), tau(0.5), &lex, &mut rng),
            toks(&["glad", "cat"])
        );
        assert_eq!(
            token_substitution(&toks(&["x", "y"]), tau(1.0), &SynonymLexicon::default(), &mut rng),
            toks(&["x", "y"])
        );
    }

    fn sentence() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..30)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn length_laws(tokens in sentence(), t in 0u32..=10, seed in 0u64..10_000) {
            let lex = SynonymLexicon::from_entries([("a", vec!["x"]), ("c", vec!["y", "z"])]);
            let vocab = Vocabulary::from_tokens(["q", "r"]);
            let t = Temperature::tenths(t).unwrap();
            let n = num_perturbed(t, tokens.len());
            let mut rng = stream(seed, Purpose::Augment, 0);
            prop_assert_eq!(synonym_replacement(&tokens, n, &lex, &mut rng).len(), tokens.len());
            prop_assert_eq!(token_substitution(&tokens, t, &lex, &mut rng).len(), tokens.len());
            prop_assert_eq!(switchout(&tokens, t, &vocab, &mut rng).unwrap().len(), tokens.len());
            prop_assert!(random_insertion(&tokens, n, &lex, &mut rng).len() >= tokens.len());
            let del = random_deletion(&tokens, t, &mut rng);
            prop_assert!(!del.is_empty() && del.len() <= tokens.len());
            let drop = pervasive_dropout(&tokens, 0.1, &mut rng).unwrap();
            prop_assert!(!drop.is_empty() && drop.len() <= tokens.len());
            prop_assert_eq!(sorted(random_swap(&tokens, n, &mut rng)), sorted(tokens.clone()));
        }

        #[test]
        fn zero_temperature_is_identity(tokens in sentence(), seed in 0u64..10_000) {
            let lex = SynonymLexicon::from_entries([("a", ["x"])]);
            let vocab = Vocabulary::from_tokens(["q"]);
            let mut rng = stream(seed, Purpose::Augment, 0);
            let z = Temperature::ZERO;
            prop_assert_eq!(&eda(&tokens, z, &lex, &mut rng), &tokens);
            prop_assert_eq!(&token_substitution(&tokens, z, &lex, &mut rng), &tokens);
            prop_assert_eq!(&switchout(&tokens, z, &vocab, &mut rng).unwrap(), &tokens);
            prop_assert_eq!(&random_deletion(&tokens, z, &mut rng), &tokens);
        }

        #[test]
        fn num_perturbed_monotone(len in 1usize..200, a in 0u32..=10, b in 0u32..=10) {
            let (lo, hi) = (a.min(b), a.max(b));
            let lo_t = Temperature::tenths(lo).unwrap();
            let hi_t = Temperature::tenths(hi).unwrap();
            prop_assert!(num_perturbed(lo_t, len) <= num_perturbed(hi_t, len));
            if hi > 0 {
                prop_assert!(num_perturbed(hi_t, len) <= num_perturbed(hi_t, len + 1));
            }
        }

        #[test]
        fn deterministic_per_key(tokens in sentence(), seed in 0u64..10_000, t in 1u32..=5) {
            let lex = SynonymLexicon::from_entries([("a", ["x"]), ("b", ["y"])]);
            let t = Temperature::tenths(t).unwrap();
            let x = eda(&tokens, t, &lex, &mut stream(seed, Purpose::Augment, 9));
            let y = eda(&tokens, t, &lex, &mut stream(seed, Purpose::Augment, 9));
            prop_assert_eq!(x, y);
        }
    }
}
