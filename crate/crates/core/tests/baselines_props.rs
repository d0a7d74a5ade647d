mod common;

use common::{kruskal_tree, random_similarity};
use hyphc::baselines::{bisecting_kmeans, linkage, Linkage};
use hyphc::{Dendrogram, SimilarityMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALL: [Linkage; 4] = [
    Linkage::Single,
    Linkage::Average,
    Linkage::Complete,
    Linkage::Ward,
];

/// Agglomeration recomputing every inter-cluster score from the leaves.
fn naive_linkage(w: &SimilarityMatrix<f64>, method: Linkage) -> Dendrogram {
    let n = w.n();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let d2 = |i: usize, j: usize| 2.0 * (1.0 - w.get(i, j));
    let inner = |c: &[usize]| {
        c.iter()
            .flat_map(|&i| c.iter().map(move |&j| (i, j)))
            .map(|(i, j)| d2(i, j))
            .sum::<f64>()
    };
    while clusters.len() > 1 {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let (x, y) = (&clusters[a].1, &clusters[b].1);
                let cross: Vec<f64> = x
                    .iter()
                    .flat_map(|&i| y.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| w.get(i, j))
                    .collect();
                let score = match method {
                    Linkage::Single => cross.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Linkage::Complete => cross.iter().cloned().fold(f64::INFINITY, f64::min),
                    Linkage::Average => cross.iter().sum::<f64>() / cross.len() as f64,
                    Linkage::Ward => {
                        let (na, nb) = (x.len() as f64, y.len() as f64);
                        let between =
                            cross.iter().map(|v| 2.0 * (1.0 - v)).sum::<f64>() / (na * nb);
                        let centroid_gap =
                            between - inner(x) / (2.0 * na * na) - inner(y) / (2.0 * nb * nb);
                        -2.0 * na * nb / (na + nb) * centroid_gap
                    }
                };
                if score > best.0 {
                    best = (score, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let (id_b, mut yb) = clusters.remove(b);
        let (id_a, xa) = &mut clusters[a];
        merges.push((*id_a, id_b));
        xa.append(&mut yb);
        *id_a = n + merges.len() - 1;
    }
    Dendrogram::from_merges(n, &merges).unwrap()
}

fn blocks(sizes: &[usize], inside: f64, across: f64) -> (SimilarityMatrix<f64>, Vec<usize>) {
    let label: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    let w = SimilarityMatrix::from_fn(label.len(), |i, j| match (i == j, label[i] == label[j]) {
        (true, _) => 0.0,
        (false, true) => inside,
        (false, false) => across,
    });
    (w, label)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn single_linkage_is_kruskal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_similarity(rng.gen_range(2..=20), &mut rng);
        prop_assert!(linkage(&w, Linkage::Single).unwrap().isomorphic(&kruskal_tree(&w)));
    }

    #[test]
    fn linkages_match_naive_recomputation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_similarity(rng.gen_range(2..=14), &mut rng);
        for method in ALL {
            prop_assert!(linkage(&w, method).unwrap().isomorphic(&naive_linkage(&w, method)), "{}", method.name());
        }
    }

    #[test]
    fn bkm_output_is_a_full_tree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=30);
        let w = random_similarity(n, &mut rng);
        let t = bisecting_kmeans(&w, seed, 3).unwrap();
        prop_assert_eq!(t.n_leaves(), n);
        prop_assert_eq!(t.n_nodes(), 2 * n - 1);
        prop_assert_eq!(t.clone(), bisecting_kmeans(&w, seed, 3).unwrap());
    }
}

#[test]
fn every_method_separates_blocks() {
    let (w, label) = blocks(&[4, 5, 3], 0.9, 0.1);
    let n = label.len();
    let mut trees: Vec<(String, Dendrogram)> = ALL
        .iter()
        .map(|&m| (m.name().to_string(), linkage(&w, m).unwrap()))
        .collect();
    trees.push(("bkm".into(), bisecting_kmeans(&w, 1, 5).unwrap()));
    for (name, t) in trees {
        // every block is exactly the leaf set of some node
        for c in 0..3 {
            let members: Vec<usize> = (0..n).filter(|&i| label[i] == c).collect();
            let found = (0..t.n_nodes()).any(|v| {
                let mut under = t.leaves_under(v);
                under.sort_unstable();
                under == members
            });
            assert!(found, "{name} split block {c}");
        }
    }
}

#[test]
fn constant_similarities_still_give_trees() {
    let w = SimilarityMatrix::constant(7, 0.5);
    for method in ALL {
        assert_eq!(linkage(&w, method).unwrap().n_leaves(), 7);
    }
    assert_eq!(bisecting_kmeans(&w, 0, 2).unwrap().n_leaves(), 7);
    assert!(linkage(&SimilarityMatrix::constant(1, 0.0), Linkage::Single).is_err());
    assert!(bisecting_kmeans(&w, 0, 0).is_err());
}
