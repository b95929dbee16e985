use fusionforge_core::denoise::*;
use fusionforge_core::rng::Rng;
use fusionforge_core::Error;
use proptest::prelude::*;

/// Full-table Levenshtein distance over chars.
fn brute_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        t[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

fn random_text(rng: &mut Rng) -> String {
    const ALPHABET: [char; 8] = ['今', '天', '很', '开', '心', 'a', 'b', ' '];
    let n = rng.below(12);
    (0..n).map(|_| ALPHABET[rng.below(ALPHABET.len())]).collect()
}

#[test]
fn distance_matches_full_table() {
    let mut rng = Rng::seed(8);
    for _ in 0..500 {
        let (a, b) = (random_text(&mut rng), random_text(&mut rng));
        let d = brute_distance(&a, &b);
        assert_eq!(edit_distance(&a, &b), d);
        let max = a.chars().count().max(b.chars().count());
        let expect = if max == 0 { 1.0 } else { 1.0 - d as f64 / max as f64 };
        assert!((similarity(&a, &b) - expect).abs() < 1e-15);
    }
}

#[test]
fn grid_decisions() {
    for i in 0..=20 {
        for j in 0..=20 {
            let (s0, s1) = (i as f64 * 0.05, j as f64 * 0.05);
            let d = select_audio(s0, s1, DEFAULT_THRESHOLD).unwrap();
            let expect = if i > j + 2 {
                Choice::Separated0
            } else if j > i + 2 {
                Choice::Separated1
            } else {
                Choice::Original
            };
            assert_eq!(d.choice, expect, "({s0}, {s1})");
        }
    }
}

#[test]
fn threshold_extremes() {
    assert_eq!(select_audio(1.0, 0.0, f64::INFINITY).unwrap().choice, Choice::Original);
    assert_eq!(select_audio(0.5, 0.5, 0.0).unwrap().choice, Choice::Original);
    assert_eq!(select_audio(0.6, 0.5, 0.0).unwrap().choice, Choice::Separated0);
    assert_eq!(select_audio(0.5, 0.6, 0.0).unwrap().choice, Choice::Separated1);
}

#[test]
fn out_of_domain_inputs() {
    assert!(matches!(select_audio(1.5, 0.0, 0.1), Err(Error::Domain(_))));
    assert!(matches!(select_audio(0.0, -0.1, 0.1), Err(Error::Domain(_))));
    assert!(select_audio(f64::NAN, 0.0, 0.1).is_err());
    assert!(select_audio(0.2, 0.1, -1.0).is_err());
}

#[test]
fn decision_composes_similarity_and_selection() {
    let mut rng = Rng::seed(21);
    for _ in 0..200 {
        let triple = TranscriptTriple {
            text_temp: random_text(&mut rng),
            text_id0: random_text(&mut rng),
            text_id1: random_text(&mut rng),
        };
        let d = denoise_decide(&triple, DEFAULT_THRESHOLD).unwrap();
        let s0 = similarity(&triple.text_id0, &triple.text_temp);
        let s1 = similarity(&triple.text_id1, &triple.text_temp);
        assert_eq!(d, select_audio(s0, s1, DEFAULT_THRESHOLD).unwrap());
    }
}

proptest! {
    #[test]
    fn similarity_is_symmetric_and_bounded(a in "[a-c今天]{0,10}", b in "[a-c今天]{0,10}") {
        let s = similarity(&a, &b);
        prop_assert_eq!(s, similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(similarity(&a, &a), 1.0);
    }

    #[test]
    fn swapping_channels_swaps_the_choice(s0 in 0.0f64..=1.0, s1 in 0.0f64..=1.0, t in 0.0f64..0.5) {
        let a = select_audio(s0, s1, t).unwrap().choice;
        let b = select_audio(s1, s0, t).unwrap().choice;
        let mirrored = match a {
            Choice::Separated0 => Choice::Separated1,
            Choice::Separated1 => Choice::Separated0,
            Choice::Original => Choice::Original,
        };
        prop_assert_eq!(b, mirrored);
    }
}
