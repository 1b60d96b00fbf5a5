#![allow(dead_code)]

use std::sync::Arc;

use foata::fixpoints::all_traces;
use foata::{Endomorphism, IndependenceAlphabet, Trace};

pub const NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Every independence alphabet on the first `n` letters.
pub fn alphabets_of_size(n: usize) -> Vec<Arc<IndependenceAlphabet>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0..1u32 << pairs.len())
        .map(|mask| {
            let chosen: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
            Arc::new(IndependenceAlphabet::from_index_pairs(&NAMES[..n], &chosen).unwrap())
        })
        .collect()
}

/// Every independence alphabet with one to `max` letters.
pub fn alphabets_up_to(max: usize) -> Vec<Arc<IndependenceAlphabet>> {
    (1..=max).flat_map(alphabets_of_size).collect()
}

/// Every well-defined endomorphism whose letter images have length at most `maxlen`.
pub fn endomorphisms(alphabet: &Arc<IndependenceAlphabet>, maxlen: usize) -> Vec<Endomorphism> {
    let images = all_traces(alphabet, maxlen);
    let n = alphabet.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let picked: Vec<Trace> = choice.iter().map(|&i| images[i].clone()).collect();
        if let Ok(phi) = Endomorphism::new(alphabet, picked) {
            out.push(phi);
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            choice[i] += 1;
            if choice[i] < images.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

pub fn describe(alphabet: &IndependenceAlphabet) -> String {
    let pairs: Vec<String> = alphabet
        .independent_pairs()
        .map(|(a, b)| format!("{}-{}", alphabet.name(a), alphabet.name(b)))
        .collect();
    format!("letters {} edges [{}]", alphabet.names().join(" "), pairs.join(" "))
}

pub fn show(phi: &Endomorphism) -> String {
    phi.to_string().trim_end().replace('\n', ", ")
}
