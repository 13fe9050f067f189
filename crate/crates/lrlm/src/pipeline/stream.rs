use crate::corpus::{EOS_ID, PAD_ID};
use crate::{Error, Result};

/// Paper-scale stream block length; desk-scale runs use the model's own
/// maximum sequence length instead.
pub const DEFAULT_BLOCK_LEN: usize = 256;

/// Concatenates sentences into one continuous stream, appending an EOS after
/// each sentence, then chunks the stream into consecutive blocks of
/// `block_len` ids. Only the final block is filled with PAD, so joining all
/// blocks and stripping trailing PADs reproduces the stream exactly. Block
/// boundaries are free to split sentences.
pub fn build_streams(corpus: &[Vec<u32>], block_len: usize) -> Result<Vec<Vec<u32>>> {
    if block_len == 0 {
        return Err(Error::InvalidArgument(
            "stream block length must be positive".into(),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("stream construction"));
    }
    let mut stream = Vec::new();
    for sentence in corpus {
        stream.extend_from_slice(sentence);
        stream.push(EOS_ID);
    }
    let mut blocks = Vec::with_capacity(stream.len().div_ceil(block_len));
    for chunk in stream.chunks(block_len) {
        let mut block = chunk.to_vec();
        block.resize(block_len, PAD_ID);
        blocks.push(block);
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NUM_SPECIALS;
    use crate::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(range: std::ops::Range<u32>) -> Vec<u32> {
        range.collect()
    }

    #[test]
    fn ten_token_sentence_in_blocks_of_four() {
        let sentence = ids(6..16);
        let blocks = build_streams(std::slice::from_ref(&sentence), 4).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[0], vec![6, 7, 8, 9]);
        assert_eq!(blocks[1], vec![10, 11, 12, 13]);
        assert_eq!(blocks[2], vec![14, 15, EOS_ID, PAD_ID]);
    }

    #[test]
    fn block_longer_than_corpus_yields_single_padded_block() {
        let blocks = build_streams(&[vec![6, 7]], 16).unwrap();
        assert_eq!(blocks.len(), 1);
        let mut expected = vec![6, 7, EOS_ID];
        expected.resize(16, PAD_ID);
        assert_eq!(blocks[0], expected);
    }

    #[test]
    fn block_boundaries_split_sentences() {
        let blocks = build_streams(&[ids(10..15), ids(20..25)], 4).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[1], vec![14, EOS_ID, 20, 21]);
    }

    #[test]
    fn stripping_pad_reproduces_the_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let corpus: Vec<Vec<u32>> = (0..37)
            .map(|_| {
                let len = rng.gen_range(1..=12);
                (0..len)
                    .map(|_| rng.gen_range(NUM_SPECIALS as u32..500))
                    .collect()
            })
            .collect();
        let mut stream = Vec::new();
        for sentence in &corpus {
            stream.extend_from_slice(sentence);
            stream.push(EOS_ID);
        }
        for block_len in [3, 7, 32] {
            let blocks = build_streams(&corpus, block_len).unwrap();
            let mut joined: Vec<u32> = blocks.concat();
            while joined.last() == Some(&PAD_ID) {
                joined.pop();
            }
            assert_eq!(joined, stream);
            assert!(!joined.contains(&PAD_ID));
            assert!(blocks.iter().all(|b| b.len() == block_len));
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(
            build_streams(&[], 8),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn zero_block_length_is_rejected() {
        assert!(matches!(
            build_streams(&[vec![6]], 0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
