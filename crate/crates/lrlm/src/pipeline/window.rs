use serde::{Deserialize, Serialize};

use crate::corpus::{BOS_ID, EOS_ID, MASK_ID};
use crate::{Error, Result};

/// One limited-context training example: a window of exactly `context`
/// tokens with MASK at the center and the original token as target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowExample {
    pub sentence: usize,
    pub position: usize,
    pub tokens: Vec<u32>,
    pub target: u32,
}

/// Emits one window per token of every sentence: the window is centered on
/// the token, the center is always MASK, missing left context is filled
/// with BOS and missing right context with EOS. `context` must be odd and
/// at least 3 so a center exists.
pub fn build_windows(corpus: &[Vec<u32>], context: usize) -> Result<Vec<WindowExample>> {
    check_context(context)?;
    let mut out = Vec::new();
    for (s, sentence) in corpus.iter().enumerate() {
        for (pos, &original) in sentence.iter().enumerate() {
            out.push(WindowExample {
                sentence: s,
                position: pos,
                tokens: fill_window(sentence, pos, context),
                target: original,
            });
        }
    }
    Ok(out)
}

/// Renders the window centered on `position` with the center masked.
pub fn window_at(sentence: &[u32], position: usize, context: usize) -> Result<Vec<u32>> {
    check_context(context)?;
    assert!(
        position < sentence.len(),
        "window position {position} out of range for sentence of length {}",
        sentence.len()
    );
    Ok(fill_window(sentence, position, context))
}

fn check_context(context: usize) -> Result<()> {
    if context < 3 || context.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "window context must be odd and at least 3, got {context}"
        )));
    }
    Ok(())
}

fn fill_window(sentence: &[u32], pos: usize, context: usize) -> Vec<u32> {
    let half = (context - 1) / 2;
    let mut tokens = Vec::with_capacity(context);
    for k in 0..context {
        let shifted = pos + k;
        if shifted < half {
            tokens.push(BOS_ID);
            continue;
        }
        let j = shifted - half;
        if j == pos {
            tokens.push(MASK_ID);
        } else if j >= sentence.len() {
            tokens.push(EOS_ID);
        } else {
            tokens.push(sentence[j]);
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Vocabulary, NUM_SPECIALS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sentence_vocab(words: &[&str]) -> Vocabulary {
        let corpus = vec![words.iter().map(|w| w.to_string()).collect::<Vec<_>>()];
        Vocabulary::build(&corpus)
    }

    fn render(vocab: &Vocabulary, tokens: &[u32]) -> String {
        vocab.decode(tokens).join(" ")
    }

    #[test]
    fn four_token_sentence_with_context_five() {
        let vocab = sentence_vocab(&["it", "is", "sunny", "today"]);
        let ids: Vec<u32> = ["it", "is", "sunny", "today"]
            .iter()
            .map(|w| vocab.id(w).unwrap())
            .collect();
        let windows = build_windows(&[ids], 5).unwrap();
        let rendered: Vec<String> = windows
            .iter()
            .map(|w| render(&vocab, &w.tokens))
            .collect();
        assert_eq!(
            rendered,
            vec![
                "[BOS] [BOS] [MASK] is sunny",
                "[BOS] it [MASK] sunny today",
                "it is [MASK] today [EOS]",
                "is sunny [MASK] [EOS] [EOS]",
            ]
        );
        let targets: Vec<&str> = windows.iter().map(|w| vocab.token(w.target)).collect();
        assert_eq!(targets, vec!["it", "is", "sunny", "today"]);
    }

    #[test]
    fn single_token_sentence_with_context_three() {
        let vocab = sentence_vocab(&["hello"]);
        let ids = vec![vocab.id("hello").unwrap()];
        let windows = build_windows(&[ids], 3).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(render(&vocab, &windows[0].tokens), "[BOS] [MASK] [EOS]");
    }

    #[test]
    fn even_or_tiny_context_is_rejected() {
        for context in [0, 1, 2, 4, 6] {
            assert!(matches!(
                build_windows(&[vec![6]], context),
                Err(Error::InvalidArgument(_))
            ));
            assert!(matches!(
                window_at(&[6], 0, context),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn window_at_matches_build_windows() {
        let sentence = vec![6, 7, 8, 9, 10, 11];
        let windows = build_windows(std::slice::from_ref(&sentence), 5).unwrap();
        for w in &windows {
            assert_eq!(window_at(&sentence, w.position, 5).unwrap(), w.tokens);
        }
    }

    #[test]
    fn one_window_per_token() {
        let corpus = vec![vec![6, 7, 8], vec![9], vec![10, 11, 12, 13, 14]];
        let windows = build_windows(&corpus, 7).unwrap();
        assert_eq!(windows.len(), 3 + 1 + 5);
        for w in &windows {
            assert_eq!(w.tokens.len(), 7);
            assert_eq!(w.tokens[3], crate::corpus::MASK_ID);
            assert_eq!(w.target, corpus[w.sentence][w.position]);
        }
    }

    #[test]
    fn stripping_padding_recovers_a_contiguous_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let len = rng.gen_range(1..=12);
            let sentence: Vec<u32> = (0..len)
                .map(|_| rng.gen_range(NUM_SPECIALS as u32..300))
                .collect();
            let context = [3, 5, 9][rng.gen_range(0..3)];
            let windows = build_windows(std::slice::from_ref(&sentence), context).unwrap();
            assert_eq!(windows.len(), sentence.len());
            for w in &windows {
                let mut inner: Vec<u32> = w.tokens.clone();
                while inner.first() == Some(&BOS_ID) {
                    inner.remove(0);
                }
                while inner.last() == Some(&EOS_ID) {
                    inner.pop();
                }
                let center = inner.iter().position(|&t| t == MASK_ID).unwrap();
                inner[center] = w.target;
                let start = w.position - center;
                assert_eq!(inner, sentence[start..start + inner.len()].to_vec());
            }
        }
    }
}
