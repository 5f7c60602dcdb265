//! Brute-force span extraction and P/R/F1 for BIO-tagged corpora.
//!
//! Spans are found by walking forward from every B- tag; matching is
//! quadratic search with explicit removal. Two levels: exact span
//! positions as a multiset, and deduplicated (surface text, type)
//! pairs across the whole corpus.

#[derive(Debug, Clone, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn prf(tp: usize, n_pred: usize, n_gold: usize) -> Prf {
    let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf { precision, recall, f1 }
}

/// (start, end-exclusive, type) for every B-initiated span. An I- tag
/// that no B- opened contributes nothing.
pub fn spans(tags: &[String]) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for i in 0..tags.len() {
        if let Some(t) = tags[i].strip_prefix("B-") {
            let cont = format!("I-{t}");
            let mut j = i + 1;
            while j < tags.len() && tags[j] == cont {
                j += 1;
            }
            out.push((i, j, t.to_string()));
        }
    }
    out
}

pub fn entity_prf(gold: &[Vec<String>], pred: &[Vec<String>]) -> Prf {
    let collect = |corpus: &[Vec<String>]| -> Vec<(usize, usize, usize, String)> {
        let mut all = Vec::new();
        for (s, tags) in corpus.iter().enumerate() {
            for (b, e, t) in spans(tags) {
                all.push((s, b, e, t));
            }
        }
        all
    };
    let mut gold_spans = collect(gold);
    let pred_spans = collect(pred);
    let (n_gold, n_pred) = (gold_spans.len(), pred_spans.len());
    let mut tp = 0;
    for p in &pred_spans {
        if let Some(at) = gold_spans.iter().position(|g| g == p) {
            gold_spans.remove(at);
            tp += 1;
        }
    }
    prf(tp, n_pred, n_gold)
}

pub fn surface_prf(
    tokens: &[Vec<String>],
    gold: &[Vec<String>],
    pred: &[Vec<String>],
) -> Prf {
    let collect = |corpus: &[Vec<String>]| -> Vec<(String, String)> {
        let mut uniq: Vec<(String, String)> = Vec::new();
        for (s, tags) in corpus.iter().enumerate() {
            for (b, e, t) in spans(tags) {
                let surface = tokens[s][b..e].join(" ");
                let key = (surface, t);
                if !uniq.contains(&key) {
                    uniq.push(key);
                }
            }
        }
        uniq
    };
    let gold_set = collect(gold);
    let pred_set = collect(pred);
    let tp = pred_set.iter().filter(|p| gold_set.contains(p)).count();
    prf(tp, pred_set.len(), gold_set.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn walks_spans_from_b_tags() {
        let t = tags(&["B-LOC", "I-LOC", "O", "B-PER"]);
        assert_eq!(
            spans(&t),
            [(0, 2, "LOC".to_string()), (3, 4, "PER".to_string())]
        );
    }

    #[test]
    fn orphan_i_is_ignored() {
        let t = tags(&["O", "I-ORG", "I-ORG"]);
        assert!(spans(&t).is_empty());
    }

    #[test]
    fn type_switch_ends_the_walk() {
        let t = tags(&["B-LOC", "I-ORG"]);
        assert_eq!(spans(&t), [(0, 1, "LOC".to_string())]);
    }

    #[test]
    fn zero_denominators_score_zero() {
        let empty = prf(0, 0, 0);
        assert_eq!(empty, Prf { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    #[test]
    fn duplicate_surfaces_collapse_at_surface_level() {
        let toks = vec![tags(&["Paris", "x", "Paris"])];
        let gold = vec![tags(&["B-LOC", "O", "B-LOC"])];
        let pred = vec![tags(&["B-LOC", "O", "O"])];
        let entity = entity_prf(&gold, &pred);
        let surface = surface_prf(&toks, &gold, &pred);
        assert_eq!(entity.recall, 0.5);
        assert_eq!(surface.recall, 1.0);
    }
}
