use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::formula::{Atom, Formula};

/// Deterministic random formula with at most `depth` nested operators.
///
/// Draws from every constructor, sugar included. An empty alphabet only
/// yields `True` leaves.
pub fn random_formula(depth: usize, alphabet: &[Atom], seed: u64) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen(&mut rng, depth, alphabet)
}

/// Same generator driven by a caller-owned RNG.
pub fn random_formula_with<R: Rng>(rng: &mut R, depth: usize, alphabet: &[Atom]) -> Formula {
    gen(rng, depth, alphabet)
}

fn leaf<R: Rng>(rng: &mut R, alphabet: &[Atom]) -> Formula {
    if alphabet.is_empty() || rng.gen_ratio(1, 5) {
        Formula::True
    } else {
        Formula::atom(alphabet[rng.gen_range(0..alphabet.len())].clone())
    }
}

fn gen<R: Rng>(rng: &mut R, depth: usize, alphabet: &[Atom]) -> Formula {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return leaf(rng, alphabet);
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0 => gen(rng, d, alphabet).not(),
        1 => gen(rng, d, alphabet).and(gen(rng, d, alphabet)),
        2 => gen(rng, d, alphabet).or(gen(rng, d, alphabet)),
        3 => gen(rng, d, alphabet).next(),
        4 => gen(rng, d, alphabet).weak_next(),
        5 => gen(rng, d, alphabet).until(gen(rng, d, alphabet)),
        6 => gen(rng, d, alphabet).release(gen(rng, d, alphabet)),
        7 => gen(rng, d, alphabet).eventually(),
        _ => gen(rng, d, alphabet).always(),
    }
}
