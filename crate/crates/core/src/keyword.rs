//! Ranked-keyword matching: weighted keyword vectors with a category-level
//! companion vector, scored as `s_k + s_c`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::RankedKeyword;
use crate::error::{Error, Result};

/// Largest weight, given to the first-ranked keyword.
pub const MAX_WEIGHT: u8 = 5;

/// Weight of the keyword (or category) at 1-based position `order`.
pub fn rank_weight(order: usize) -> u8 {
    debug_assert!((1..=MAX_WEIGHT as usize).contains(&order));
    MAX_WEIGHT + 1 - order as u8
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordVector {
    pub weights: BTreeMap<String, u8>,
    pub category_weights: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeywordScore {
    pub keyword: f64,
    pub category: f64,
    pub total: f64,
}

/// Builds the weighted vector for one entity's ranked keyword selection.
/// Categories are weighted by the position at which they first appear.
pub fn keyword_vector(
    keywords: &[RankedKeyword],
    category_map: &BTreeMap<String, String>,
) -> Result<KeywordVector> {
    if keywords.len() > MAX_WEIGHT as usize {
        return Err(Error::Validation(format!(
            "{} keywords selected, at most {MAX_WEIGHT} allowed",
            keywords.len()
        )));
    }
    let mut ordered: Vec<&RankedKeyword> = keywords.iter().collect();
    ordered.sort_by_key(|k| k.rank);

    let mut out = KeywordVector::default();
    let mut seen_categories = HashSet::new();
    for (i, kw) in ordered.iter().enumerate() {
        let category = category_map.get(&kw.keyword).ok_or_else(|| Error::Unknown {
            kind: "keyword",
            id: kw.keyword.clone(),
        })?;
        out.weights.insert(kw.keyword.clone(), rank_weight(i + 1));
        if seen_categories.insert(category.as_str()) {
            let order = seen_categories.len();
            out.category_weights
                .insert(category.clone(), rank_weight(order));
        }
    }
    Ok(out)
}

fn sparse_cosine(a: &BTreeMap<String, u8>, b: &BTreeMap<String, u8>) -> f64 {
    // integer weights keep every product exact
    let norm = |m: &BTreeMap<String, u8>| m.values().map(|&w| u64::from(w).pow(2)).sum::<u64>();
    let (na, nb) = (norm(a), norm(b));
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let dot: u64 = a
        .iter()
        .filter_map(|(k, &w)| b.get(k).map(|&v| u64::from(w) * u64::from(v)))
        .sum();
    dot as f64 / ((na * nb) as f64).sqrt()
}

/// Keyword cosine plus category cosine. Both terms are always summed, so the
/// total lies in `[0, 2]`.
pub fn keyword_similarity(a: &KeywordVector, b: &KeywordVector) -> KeywordScore {
    let keyword = sparse_cosine(&a.weights, &b.weights);
    let category = sparse_cosine(&a.category_weights, &b.category_weights);
    KeywordScore {
        keyword,
        category,
        total: keyword + category,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmap(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, c)| (k.to_string(), c.to_string()))
            .collect()
    }

    fn ranked(kws: &[&str]) -> Vec<RankedKeyword> {
        kws.iter()
            .enumerate()
            .map(|(i, k)| RankedKeyword::new(*k, i as u8 + 1))
            .collect()
    }

    fn astro_map() -> BTreeMap<String, String> {
        cmap(&[
            ("Stars: supernovae", "Stars"),
            ("Stars: binaries", "Stars"),
            ("Galaxies: abundances", "Galaxies"),
            ("Cosmology: dark matter", "Cosmology"),
        ])
    }

    #[test]
    fn three_keyword_example_weights() {
        let v = keyword_vector(
            &ranked(&["Stars: supernovae", "Stars: binaries", "Galaxies: abundances"]),
            &astro_map(),
        )
        .unwrap();
        assert_eq!(v.weights["Stars: supernovae"], 5);
        assert_eq!(v.weights["Stars: binaries"], 4);
        assert_eq!(v.weights["Galaxies: abundances"], 3);
        assert_eq!(v.weights.len(), 3);
        assert_eq!(v.category_weights, cmap_u8(&[("Stars", 5), ("Galaxies", 4)]));
    }

    fn cmap_u8(pairs: &[(&str, u8)]) -> BTreeMap<String, u8> {
        pairs.iter().map(|(k, w)| (k.to_string(), *w)).collect()
    }

    #[test]
    fn two_keywords_get_five_and_four() {
        let v = keyword_vector(&ranked(&["Stars: binaries", "Cosmology: dark matter"]), &astro_map())
            .unwrap();
        assert_eq!(v.weights, cmap_u8(&[("Stars: binaries", 5), ("Cosmology: dark matter", 4)]));
    }

    #[test]
    fn ranks_not_list_order_drive_weights() {
        let mut kws = ranked(&["Stars: binaries", "Stars: supernovae"]);
        kws.reverse();
        let v = keyword_vector(&kws, &astro_map()).unwrap();
        assert_eq!(v.weights["Stars: binaries"], 5);
    }

    #[test]
    fn unknown_keyword_errors() {
        assert!(keyword_vector(&ranked(&["Sun: flares", "Stars: binaries"]), &astro_map()).is_err());
    }

    #[test]
    fn identical_selection_scores_two() {
        let v = keyword_vector(
            &ranked(&["Stars: supernovae", "Galaxies: abundances", "Stars: binaries"]),
            &astro_map(),
        )
        .unwrap();
        let s = keyword_similarity(&v, &v);
        assert_eq!(s.keyword, 1.0);
        assert_eq!(s.category, 1.0);
        assert_eq!(s.total, 2.0);
    }

    #[test]
    fn disjoint_selection_scores_zero() {
        let m = astro_map();
        let a = keyword_vector(&ranked(&["Stars: supernovae", "Stars: binaries"]), &m).unwrap();
        let b = keyword_vector(&ranked(&["Galaxies: abundances", "Cosmology: dark matter"]), &m)
            .unwrap();
        assert_eq!(keyword_similarity(&a, &b).total, 0.0);
    }

    #[test]
    fn partial_overlap_matches_hand_cosine() {
        let m = cmap(&[("A", "X"), ("B", "X"), ("C", "X")]);
        let a = keyword_vector(&ranked(&["A", "B"]), &m).unwrap();
        let b = keyword_vector(&ranked(&["A", "C"]), &m).unwrap();
        let s = keyword_similarity(&a, &b);
        // (5*5) / (sqrt(41) * sqrt(41))
        assert!((s.keyword - 25.0 / 41.0).abs() < 1e-12);
        assert_eq!(s.category, 1.0);
    }

    #[test]
    fn empty_vector_scores_zero() {
        let a = KeywordVector::default();
        let b = keyword_vector(&ranked(&["A", "B"]), &cmap(&[("A", "X"), ("B", "Y")])).unwrap();
        assert_eq!(keyword_similarity(&a, &b).total, 0.0);
    }
}
