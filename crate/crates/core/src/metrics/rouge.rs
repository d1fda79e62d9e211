use super::RougeScore;
use crate::text::tokenize;

/// Longest common subsequence length, two-row dynamic program.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeScore {
    if candidate.is_empty() || reference.is_empty() {
        return RougeScore::ZERO;
    }
    let lcs = lcs_length(candidate, reference) as f64;
    RougeScore::new(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

/// Whole-text ROUGE-L over the shared tokenizer; β = 1, no stemming.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_disjoint() {
        let s = rouge_l("the cat sat", "the cat sat");
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert_eq!(rouge_l("alpha beta", "gamma delta").f1, 0.0);
        assert_eq!(rouge_l("", "x"), RougeScore::ZERO);
        assert_eq!(rouge_l("x", ""), RougeScore::ZERO);
    }

    #[test]
    fn cat_on_the_mat() {
        // common subsequence "the cat the mat"
        let s = rouge_l("the cat sat on the mat", "the cat ran to the mat");
        assert_eq!(
            lcs_length(
                &tokenize("the cat sat on the mat"),
                &tokenize("the cat ran to the mat")
            ),
            4
        );
        assert!((s.precision - 4.0 / 6.0).abs() < 1e-12);
        assert!((s.recall - 4.0 / 6.0).abs() < 1e-12);
        assert!((s.f1 - 0.666_666_666_666_666_6).abs() < 1e-12);
    }

    #[test]
    fn tokenization_is_case_and_punctuation_blind() {
        assert_eq!(
            rouge_l("Mouth pain, ear pain.", "mouth pain ear pain").f1,
            1.0
        );
    }
}
