//! Random-secret scheme: `X = [L M I]` where `L` makes `X P = H` for a uniformly
//! random `(R, H)` that never depends on `M`.
//!
//! Multicast sends one `L_i` per receiver, `X = [L_1 .. L_k M I]`; receiver `i`
//! drops every other `L_j` and decodes as a single receiver. When receivers do
//! not know their index, `M` is augmented with one authenticator tag per
//! receiver and each receiver tries every `L_j`.

use rand::Rng;

use super::{SchemeError, Stage, StagedFailure};
use crate::blocks::{sc_decode, sc_encode, DecodeFailure, SecretPackage};
use crate::cryptokit::{PrgStream, SEED_LEN};
use crate::gf::Field;
use crate::linalg::{vandermonde, FieldMatrix, Solution};

/// The shared secret: `C` parity symbols and a `b x C` hash, both uniform.
pub type RsSecret = SecretPackage;

/// Draws `R` then `H`, independently of any message.
pub fn rs_generate_secret(field: Field, c: usize, b: usize, rng: &mut impl Rng) -> RsSecret {
    let parity = (0..c).map(|_| rng.gen_range(0..field.q())).collect();
    let hash = FieldMatrix::from_fn(field, b, c, |_, _| rng.gen_range(0..field.q()) as u64);
    RsSecret { parity, hash }
}

/// Some parity symbol is zero or two coincide.
pub fn rs_is_bad(parity: &[u32]) -> bool {
    parity.iter().enumerate().any(|(i, &r)| r == 0 || parity[..i].contains(&r))
}

/// Exact probability that uniform parity symbols are bad.
pub fn e_bad_probability(q: u32, c: usize) -> f64 {
    let q = q as f64;
    1.0 - (0..c).map(|i| ((q - 1.0 - i as f64) / q).max(0.0)).product::<f64>()
}

pub fn e_bad_bound(q: u32, c: usize) -> f64 {
    (c * c) as f64 / q as f64
}

/// `L` with `[L tail] P = H`, or zero when the parity symbols are bad.
fn solve_l(tail: &FieldMatrix, secret: &RsSecret) -> Result<FieldMatrix, SchemeError> {
    let field = tail.field();
    let c = secret.parity.len();
    let b = tail.rows();
    if rs_is_bad(&secret.parity) {
        return Ok(FieldMatrix::zeros(field, b, c));
    }
    let p = vandermonde(field, &secret.parity, c + tail.cols())?;
    let v = p.select_rows(&(0..c).collect::<Vec<_>>());
    let p_rest = p.select_rows(&(c..p.rows()).collect::<Vec<_>>());
    let h_prime = tail.mat_mul(&p_rest)?;
    let rhs = secret.hash.sub(&h_prime)?;
    // L V = rhs, solved as V^T L^T = rhs^T
    Ok(match v.transpose().solve(&rhs.transpose())? {
        Solution::Unique(lt) => lt.transpose(),
        Solution::NoSolution | Solution::NonUnique => FieldMatrix::zeros(field, b, c),
    })
}

/// Single-receiver encoder.
pub fn rs_encode(m: &FieldMatrix, secret: &RsSecret) -> Result<FieldMatrix, SchemeError> {
    rs_encode_multi(m, std::slice::from_ref(secret))
}

/// `X = [L_1 .. L_k M I]`, one `L_i` per receiver secret.
pub fn rs_encode_multi(m: &FieldMatrix, secrets: &[RsSecret]) -> Result<FieldMatrix, SchemeError> {
    if secrets.is_empty() {
        return Err(SchemeError::Config("at least one receiver secret is required".into()));
    }
    if let Some(s) = secrets.iter().find(|s| s.hash.rows() != m.rows() || s.hash.cols() != s.parity.len()) {
        return Err(SchemeError::Config(format!(
            "secret hash is {}x{}, message has {} rows",
            s.hash.rows(),
            s.hash.cols(),
            m.rows()
        )));
    }
    let tail = sc_encode(m);
    let ls = secrets.iter().map(|s| solve_l(&tail, s)).collect::<Result<Vec<_>, _>>()?;
    let mut parts: Vec<&FieldMatrix> = ls.iter().collect();
    parts.push(&tail);
    Ok(FieldMatrix::hstack(&parts)?)
}

/// Width of `M` for block length `n`, `k` receivers and `C` parity symbols.
pub fn message_width(n: usize, b: usize, c: usize, receivers: usize) -> Option<usize> {
    n.checked_sub(b + c * receivers).filter(|&w| w > 0)
}

/// Columns receiver `index` keeps: its own `L_i` followed by `[M I]`.
pub fn receiver_columns(y: &FieldMatrix, index: usize, receivers: usize, c: usize) -> FieldMatrix {
    let own = y.columns(index * c..(index + 1) * c);
    let tail = y.columns(receivers * c..y.cols());
    FieldMatrix::hstack(&[&own, &tail]).expect("same rows")
}

/// Hash-checked decoding followed by dropping the `L` prefix.
pub fn rs_decode(y: &FieldMatrix, secret: &RsSecret, b: usize, z: usize) -> Result<FieldMatrix, DecodeFailure> {
    let full = sc_decode(y, secret, b, z)?;
    Ok(full.columns(secret.parity.len()..full.cols()))
}

pub fn rs_decode_multi(
    y: &FieldMatrix,
    secret: &RsSecret,
    index: usize,
    receivers: usize,
    b: usize,
    z: usize,
) -> Result<FieldMatrix, DecodeFailure> {
    rs_decode(&receiver_columns(y, index, receivers, secret.parity.len()), secret, b, z)
}

/// Symbols per authenticator tag.
pub const TAG_SYMBOLS: usize = 4;

/// Almost pairwise-independent hash `g(M) = a * phi(M) + c`, applied per tag symbol,
/// with `phi` a random linear functional expanded from a seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Authenticator {
    slope: Vec<u32>,
    offset: Vec<u32>,
    functional_seed: [u8; SEED_LEN],
}

impl Authenticator {
    pub fn generate(field: Field, rng: &mut impl Rng) -> Self {
        Self {
            slope: (0..TAG_SYMBOLS).map(|_| rng.gen_range(1..field.q())).collect(),
            offset: (0..TAG_SYMBOLS).map(|_| rng.gen_range(0..field.q())).collect(),
            functional_seed: rng.gen(),
        }
    }

    pub fn tag(&self, m: &FieldMatrix) -> Vec<u32> {
        let f = m.field();
        let mut stream = PrgStream::new(self.functional_seed);
        (0..TAG_SYMBOLS)
            .map(|t| {
                let phi = stream.next_symbols(f, m.data().len());
                let fold = phi.iter().zip(m.data()).fold(0, |acc, (&p, &v)| f.mul_add(acc, p, v));
                f.mul_add(self.offset[t], self.slope[t], fold)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFreeSecret {
    pub secret: RsSecret,
    pub auth: Authenticator,
}

pub fn tag_columns(receivers: usize, b: usize) -> usize {
    (receivers * TAG_SYMBOLS).div_ceil(b)
}

/// `[M T]` with every receiver's tag packed row-major into `T`.
pub fn augment(m: &FieldMatrix, auths: &[&Authenticator]) -> FieldMatrix {
    let b = m.rows();
    let cols = tag_columns(auths.len(), b);
    let mut flat: Vec<u32> = auths.iter().flat_map(|a| a.tag(m)).collect();
    flat.resize(b * cols, 0);
    let t = FieldMatrix::from_vec(m.field(), b, cols, flat).expect("sized above");
    FieldMatrix::hstack(&[m, &t]).expect("same rows")
}

pub fn rs_encode_index_free(m: &FieldMatrix, secrets: &[IndexFreeSecret]) -> Result<FieldMatrix, SchemeError> {
    let auths: Vec<&Authenticator> = secrets.iter().map(|s| &s.auth).collect();
    let plain: Vec<RsSecret> = secrets.iter().map(|s| s.secret.clone()).collect();
    rs_encode_multi(&augment(m, &auths), &plain)
}

/// Whether `g(m)` appears among the decoded tags.
pub fn authenticates(auth: &Authenticator, m: &FieldMatrix, tags: &FieldMatrix, receivers: usize) -> bool {
    let expected = auth.tag(m);
    tags.data().chunks(TAG_SYMBOLS).take(receivers).any(|t| t == expected.as_slice())
}

/// Result of trying every `L_j` with one receiver's secret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFreeDecode {
    pub message: FieldMatrix,
    pub block: usize,
    /// Blocks that decoded to some message that then failed authentication.
    pub rejected: usize,
}

pub fn rs_decode_index_free(
    y: &FieldMatrix,
    secret: &IndexFreeSecret,
    receivers: usize,
    message_cols: usize,
    b: usize,
    z: usize,
) -> Result<IndexFreeDecode, StagedFailure> {
    let mut rejected = 0;
    let mut last = DecodeFailure::Inconsistent;
    for block in 0..receivers {
        match rs_decode_multi(y, &secret.secret, block, receivers, b, z) {
            Ok(aug) => {
                let m = aug.columns(0..message_cols);
                let tags = tag_region(&aug, message_cols);
                if authenticates(&secret.auth, &m, &tags, receivers) {
                    return Ok(IndexFreeDecode { message: m, block, rejected });
                }
                rejected += 1;
            }
            Err(f) => last = f,
        }
    }
    Err(if rejected > 0 {
        StagedFailure { stage: Stage::Authenticate, failure: DecodeFailure::Inconsistent }
    } else {
        StagedFailure::at(Stage::Sc)(last)
    })
}

/// Tag symbols of a decoded `[M T]`, row-major.
pub fn tag_region(aug: &FieldMatrix, message_cols: usize) -> FieldMatrix {
    let t = aug.columns(message_cols..aug.cols());
    FieldMatrix::from_vec(t.field(), 1, t.data().len(), t.data().to_vec()).expect("flat")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn f(q: u32) -> Field {
        Field::new(q).unwrap()
    }

    fn row(field: Field, v: &[u32]) -> FieldMatrix {
        FieldMatrix::from_rows(field, &[v.to_vec()]).unwrap()
    }

    #[test]
    fn encode_hand_example() {
        let f7 = f(7);
        let secret = RsSecret { parity: vec![3, 5], hash: row(f7, &[0, 0]) };
        let x = rs_encode(&row(f7, &[1, 2]), &secret).unwrap();
        assert_eq!(x, row(f7, &[3, 0, 1, 2, 1]));
        let p = vandermonde(f7, &[3, 5], 5).unwrap();
        assert!(x.mat_mul(&p).unwrap().is_zero());
    }

    #[test]
    fn bad_parity_gives_zero_l() {
        let f7 = f(7);
        assert!(rs_is_bad(&[0, 3]));
        assert!(rs_is_bad(&[3, 3]));
        assert!(!rs_is_bad(&[3, 5]));
        let secret = RsSecret { parity: vec![3, 3], hash: row(f7, &[4, 1]) };
        let x = rs_encode(&row(f7, &[1, 2]), &secret).unwrap();
        assert!(x.columns(0..2).is_zero());
    }

    #[test]
    fn e_bad_exhaustive() {
        for (q, c) in [(5u32, 2usize), (7, 2), (7, 3), (5, 3)] {
            let total = (q as usize).pow(c as u32);
            let bad = (0..total)
                .filter(|&code| {
                    let r: Vec<u32> = (0..c).map(|i| (code / (q as usize).pow(i as u32) % q as usize) as u32).collect();
                    rs_is_bad(&r)
                })
                .count();
            let exact = e_bad_probability(q, c);
            assert!((bad as f64 / total as f64 - exact).abs() < 1e-12, "q={q} c={c}");
            assert!(exact <= e_bad_bound(q, c));
            if (q, c) == (5, 2) {
                assert_eq!(bad, 13);
            }
        }
    }

    #[test]
    fn bijection_h_to_l_exhaustive() {
        let f5 = f(5);
        let m = row(f5, &[2, 4]);
        for r1 in 0..5 {
            for r2 in 0..5 {
                let parity = vec![r1, r2];
                if rs_is_bad(&parity) {
                    continue;
                }
                let mut seen = HashSet::new();
                for h in 0..25u32 {
                    let secret = RsSecret { parity: parity.clone(), hash: row(f5, &[h / 5, h % 5]) };
                    let x = rs_encode(&m, &secret).unwrap();
                    seen.insert(x.columns(0..2).into_data());
                }
                assert_eq!(seen.len(), 25, "R = {parity:?}");
            }
        }
    }

    #[test]
    fn secret_is_message_independent_and_uniform() {
        let f5 = f(5);
        let a = rs_generate_secret(f5, 2, 2, &mut ChaCha8Rng::seed_from_u64(3));
        let b = rs_generate_secret(f5, 2, 2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut r_counts = [[0usize; 5]; 2];
        let mut h_counts = [0usize; 5];
        for _ in 0..n {
            let s = rs_generate_secret(f5, 2, 1, &mut rng);
            for d in 0..2 {
                r_counts[d][s.parity[d] as usize] += 1;
            }
            h_counts[s.hash.get(0, 0) as usize] += 1;
        }
        let sigma = (0.2f64 * 0.8 / n as f64).sqrt();
        for counts in r_counts.iter().chain([&h_counts]) {
            for &c in counts {
                assert!((c as f64 / n as f64 - 0.2).abs() <= 3.0 * sigma, "{counts:?}");
            }
        }
    }

    #[test]
    fn uniform_h_gives_uniform_l() {
        let f5 = f(5);
        let m = row(f5, &[1, 3]);
        let parity = vec![2, 4];
        let mut counts = std::collections::HashMap::new();
        for h in 0..25u32 {
            let secret = RsSecret { parity: parity.clone(), hash: row(f5, &[h / 5, h % 5]) };
            *counts.entry(rs_encode(&m, &secret).unwrap().columns(0..2).into_data()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 25);
        assert!(counts.values().all(|&c| c == 1));
    }

    #[test]
    fn single_receiver_multi_is_identical() {
        let fq = f(251);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = FieldMatrix::from_fn(fq, 2, 10, |_, _| rng.gen_range(0..251) as u64);
        let s = rs_generate_secret(fq, 3, 2, &mut rng);
        assert_eq!(rs_encode(&m, &s).unwrap(), rs_encode_multi(&m, std::slice::from_ref(&s)).unwrap());
    }

    #[test]
    fn multi_receivers_each_see_a_valid_codeword() {
        let fq = f(251);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = FieldMatrix::from_fn(fq, 2, 9, |_, _| rng.gen_range(0..251) as u64);
        let secrets: Vec<RsSecret> = (0..3).map(|_| rs_generate_secret(fq, 3, 2, &mut rng)).collect();
        let x = rs_encode_multi(&m, &secrets).unwrap();
        assert_eq!(x.cols(), 3 * 3 + 9 + 2);
        for (i, s) in secrets.iter().enumerate() {
            let xi = receiver_columns(&x, i, 3, 3);
            if !rs_is_bad(&s.parity) {
                let p = vandermonde(fq, &s.parity, xi.cols()).unwrap();
                assert_eq!(xi.mat_mul(&p).unwrap(), s.hash);
            }
            assert_eq!(rs_decode_multi(&x, s, i, 3, 2, 1).unwrap(), m);
        }
    }

    #[test]
    fn index_free_clean_decode_finds_own_block() {
        let fq = f(251);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = FieldMatrix::from_fn(fq, 1, 6, |_, _| rng.gen_range(0..251) as u64);
        let secrets: Vec<IndexFreeSecret> = (0..2)
            .map(|_| IndexFreeSecret { secret: rs_generate_secret(fq, 2, 1, &mut rng), auth: Authenticator::generate(fq, &mut rng) })
            .collect();
        let x = rs_encode_index_free(&m, &secrets).unwrap();
        for s in &secrets {
            let d = rs_decode_index_free(&x, s, 2, 6, 1, 1).unwrap();
            assert_eq!(d.message, m);
        }
    }

    #[test]
    fn wrong_messages_never_authenticate() {
        let fq = f(251);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let auths: Vec<Authenticator> = (0..2).map(|_| Authenticator::generate(fq, &mut rng)).collect();
        for _ in 0..2000 {
            let m = FieldMatrix::from_fn(fq, 2, 5, |_, _| rng.gen_range(0..251) as u64);
            let aug = augment(&m, &[&auths[0], &auths[1]]);
            let tags = tag_region(&aug, 5);
            assert!(authenticates(&auths[0], &m, &tags, 2));
            let mut wrong = m.clone();
            let (r, c) = (rng.gen_range(0..2), rng.gen_range(0..5));
            wrong.set(r, c, fq.add(wrong.get(r, c), rng.gen_range(1..251)));
            assert!(!authenticates(&auths[0], &wrong, &tags, 2));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn good_parity_hashes_exactly(seed in any::<u64>(), b in 1usize..4, c in 1usize..5, width in 1usize..8) {
            let fq = f(251);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = FieldMatrix::from_fn(fq, b, width, |_, _| rng.gen_range(0..251) as u64);
            let s = rs_generate_secret(fq, c, b, &mut rng);
            let x = rs_encode(&m, &s).unwrap();
            prop_assert_eq!(x.cols(), c + width + b);
            prop_assert_eq!(x.columns(c..c + width), m);
            if !rs_is_bad(&s.parity) {
                let p = vandermonde(fq, &s.parity, x.cols()).unwrap();
                prop_assert_eq!(x.mat_mul(&p).unwrap(), s.hash);
            }
        }
    }
}
