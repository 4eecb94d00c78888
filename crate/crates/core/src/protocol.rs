//! Round-level protocol engine.
//!
//! Each round the verifiers draw classical strings `s1`, `s2` (n/2 bits each),
//! derive the basis bit `b = f(s1‖s2)` and an eigenvalue bit `c`, and send a
//! weak coherent pulse encoding `(b, c)`. The prover answers `c′ ∈ {0, 1, ⊥}`.
//! Quantum states are abstracted to their photon count and `(b, c)`.
//!
//! Sessions split their rounds into fixed chunks of [`CHUNK_ROUNDS`]; every
//! chunk draws from its own substreams of the session seed, so a session is
//! bit-reproducible regardless of how chunks are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher24;
use std::hash::Hasher;
use std::ops::{Add, AddAssign};

use crate::error::{check_closed, domain, QpvError, Result};
use crate::exec::{map_units, Execution};
use crate::photon_stats::{sample_threshold_detection, ChannelModel, Intensity, PhotonClass, PhotonSource};
use crate::planner::ProtocolParams;
use crate::rng::{substream, Lane, StreamRng};
use crate::security_bounds::{threshold, ScoreCoefficients};

/// Largest width the explicit bit-table backend accepts (2³⁰ bits = 128 MiB).
pub const MAX_EXPLICIT_BITS: u32 = 30;

/// Rounds per independently seeded work unit.
pub const CHUNK_ROUNDS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionBackend {
    /// A 2ⁿ-bit table filled from the seeded stream.
    Explicit,
    /// SipHash-2-4 of the input keyed by the seed; constant memory for any n.
    Keyed,
    /// The constant function; used for tests.
    Constant(bool),
}

#[derive(Clone)]
enum Evaluator {
    Table(Vec<u64>),
    Keyed(SipHasher24),
    Constant(bool),
}

/// Pre-agreed Boolean function `f: {0,1}ⁿ → {0,1}` selecting the basis.
#[derive(Clone)]
pub struct BooleanFunction {
    n: u32,
    seed: u64,
    backend: FunctionBackend,
    eval: Evaluator,
}

impl std::fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BooleanFunction")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("backend", &self.backend)
            .finish()
    }
}

const KEYED_DOMAIN: u64 = 0x7170_765f_6261_7369; // "qpv_basi"

/// Words of the explicit table for an `n`-bit input.
pub fn table_words(n: u32) -> usize {
    ((1u64 << n) as usize).div_ceil(64)
}

impl BooleanFunction {
    pub fn create(n: u32, seed: u64, backend: FunctionBackend) -> Result<Self> {
        if !(2..=64).contains(&n) || !n.is_multiple_of(2) {
            return Err(domain("n", n as f64, "input width must be even and in [2, 64]"));
        }
        let eval = match backend {
            FunctionBackend::Explicit => {
                if n > MAX_EXPLICIT_BITS {
                    return Err(QpvError::Capacity {
                        n,
                        max: MAX_EXPLICIT_BITS,
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Evaluator::Table((0..table_words(n)).map(|_| rng.next_u64()).collect())
            }
            FunctionBackend::Keyed => Evaluator::Keyed(SipHasher24::new_with_keys(seed, KEYED_DOMAIN)),
            FunctionBackend::Constant(bit) => Evaluator::Constant(bit),
        };
        Ok(Self { n, seed, backend, eval })
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backend(&self) -> FunctionBackend {
        self.backend
    }

    pub fn eval(&self, s: u64) -> Result<bool> {
        if self.n < 64 && s >> self.n != 0 {
            return Err(QpvError::Width {
                expected: self.n,
                got: 64 - s.leading_zeros(),
            });
        }
        Ok(self.eval_unchecked(s))
    }

    #[inline]
    fn eval_unchecked(&self, s: u64) -> bool {
        match &self.eval {
            Evaluator::Table(words) => (words[(s >> 6) as usize] >> (s & 63)) & 1 == 1,
            Evaluator::Keyed(key) => {
                let mut h = *key;
                h.write_u64(s);
                h.finish() & 1 == 1
            }
            Evaluator::Constant(bit) => *bit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    /// V₁'s half of the classical input.
    pub s1: u32,
    /// V₂'s half of the classical input.
    pub s2: u32,
    /// Basis bit, always `f(s1‖s2)`.
    pub b: bool,
    /// Eigenvalue bit.
    pub c: bool,
}

impl Challenge {
    pub fn input(&self, n: u32) -> u64 {
        ((self.s1 as u64) << (n / 2)) | self.s2 as u64
    }
}

pub fn make_challenge<R: Rng + ?Sized>(f: &BooleanFunction, rng: &mut R) -> Challenge {
    let half = f.n / 2;
    let mask = if half == 32 { u32::MAX } else { (1u32 << half) - 1 };
    let s1 = rng.next_u32() & mask;
    let s2 = rng.next_u32() & mask;
    let b = f.eval_unchecked(((s1 as u64) << half) | s2 as u64);
    Challenge { s1, s2, b, c: rng.gen() }
}

/// Credential returned by the prover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Response {
    Outcome(bool),
    NoResponse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTally {
    pub n_c: u64,
    pub n_i: u64,
    pub n_perp: u64,
}

impl RoundTally {
    pub fn new(n_c: u64, n_i: u64, n_perp: u64) -> Self {
        Self { n_c, n_i, n_perp }
    }

    pub fn total(&self) -> u64 {
        self.n_c + self.n_i + self.n_perp
    }

    /// Rounds with any response (correct or not).
    pub fn responses(&self) -> u64 {
        self.n_c + self.n_i
    }

    #[inline]
    pub fn record(&mut self, response: Response, c: bool) {
        match response {
            Response::Outcome(v) if v == c => self.n_c += 1,
            Response::Outcome(_) => self.n_i += 1,
            Response::NoResponse => self.n_perp += 1,
        }
    }
}

impl Add for RoundTally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.n_c + o.n_c, self.n_i + o.n_i, self.n_perp + o.n_perp)
    }
}

impl AddAssign for RoundTally {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Per photon-class breakdown of a tally. Simulator-side ground truth only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDiagnostics {
    pub vacuum: RoundTally,
    pub single: RoundTally,
    pub multi: RoundTally,
}

impl ClassDiagnostics {
    pub fn class_mut(&mut self, class: PhotonClass) -> &mut RoundTally {
        match class {
            PhotonClass::Vacuum => &mut self.vacuum,
            PhotonClass::Single => &mut self.single,
            PhotonClass::Multi => &mut self.multi,
        }
    }

    pub fn combined(&self) -> RoundTally {
        self.vacuum + self.single + self.multi
    }
}

impl Add for ClassDiagnostics {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            vacuum: self.vacuum + o.vacuum,
            single: self.single + o.single,
            multi: self.multi + o.multi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub tally: RoundTally,
    pub score: f64,
    pub threshold: f64,
    pub passed: bool,
    pub diagnostics: ClassDiagnostics,
}

/// Modeled dishonest provers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// Answers (with a uniform bit) its first `x` vacuum rounds, silent otherwise.
    VacuumResponder { x: u64 },
    /// Measures in a uniformly guessed basis and forwards the outcome.
    InterceptResend { det_eff: f64 },
    /// Perfect on multi-photon pulses, intercept-resend on single photons,
    /// vacuum-responder on vacuum. Sees the true photon class.
    Composite { x: u64, det_eff: f64 },
}

impl AdversaryStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AdversaryStrategy::VacuumResponder { .. } => Ok(()),
            AdversaryStrategy::InterceptResend { det_eff } | AdversaryStrategy::Composite { det_eff, .. } => {
                check_closed("det_eff", det_eff, 0.0, 1.0).map(|_| ())
            }
        }
    }

    fn vacuum_quota(&self) -> Option<u64> {
        match *self {
            AdversaryStrategy::VacuumResponder { x } | AdversaryStrategy::Composite { x, .. } => Some(x),
            AdversaryStrategy::InterceptResend { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "kebab-case")]
pub enum Role {
    Honest,
    Adversary(AdversaryStrategy),
}

/// Honest measurement of a pulse carrying `k` photons.
#[inline]
fn honest_response_for<R: Rng + ?Sized>(k: u64, ch: &Challenge, channel: &ChannelModel, rng: &mut R) -> Response {
    if !sample_threshold_detection(k, channel.eta, rng) {
        return Response::NoResponse;
    }
    let flipped = rng.gen::<f64>() < channel.p_e;
    Response::Outcome(ch.c ^ flipped)
}

/// Honest prover: measures in basis `b`, so a click reports `c` up to misalignment.
pub fn honest_prover_respond<R: Rng + ?Sized>(
    ch: &Challenge,
    mu: Intensity,
    channel: &ChannelModel,
    rng: &mut R,
) -> Response {
    let k = PhotonSource::new(mu).sample(rng);
    honest_response_for(k, ch, channel, rng)
}

#[inline]
fn intercept_resend<R: Rng + ?Sized>(k: u64, det_eff: f64, ch: &Challenge, rng: &mut R) -> Response {
    if !sample_threshold_detection(k, det_eff, rng) {
        return Response::NoResponse;
    }
    let guessed_basis: bool = rng.gen();
    if guessed_basis == ch.b {
        Response::Outcome(ch.c)
    } else {
        Response::Outcome(rng.gen())
    }
}

/// Adversary answer for a pulse of `k` photons.
///
/// `vacuum_rank` is the number of vacuum rounds that preceded this one in the
/// session; it only matters on vacuum rounds, where the first `x` are answered.
pub fn adversary_respond<R: Rng + ?Sized>(
    strategy: &AdversaryStrategy,
    ch: &Challenge,
    k: u64,
    vacuum_rank: u64,
    rng: &mut R,
) -> Response {
    let class = PhotonClass::of(k);
    let vacuum_answer = |x: u64, rng: &mut R| {
        if vacuum_rank < x {
            Response::Outcome(rng.gen())
        } else {
            Response::NoResponse
        }
    };
    match (*strategy, class) {
        (AdversaryStrategy::VacuumResponder { x }, PhotonClass::Vacuum) => vacuum_answer(x, rng),
        (AdversaryStrategy::VacuumResponder { .. }, _) => Response::NoResponse,
        (AdversaryStrategy::InterceptResend { det_eff }, _) => intercept_resend(k, det_eff, ch, rng),
        (AdversaryStrategy::Composite { x, .. }, PhotonClass::Vacuum) => vacuum_answer(x, rng),
        (AdversaryStrategy::Composite { det_eff, .. }, PhotonClass::Single) => intercept_resend(k, det_eff, ch, rng),
        (AdversaryStrategy::Composite { .. }, PhotonClass::Multi) => Response::Outcome(ch.c),
    }
}

/// Γ = γ_c·n_c − γ_⊥·n_⊥ − γ_I·n_I.
pub fn score_tally(tally: &RoundTally, coeffs: &ScoreCoefficients) -> f64 {
    coeffs.gamma_c * tally.n_c as f64 - coeffs.gamma_perp * tally.n_perp as f64 - coeffs.gamma_i * tally.n_i as f64
}

/// Pass iff `score ≥ threshold`.
pub fn verify(score: f64, threshold: f64) -> Result<bool> {
    if !score.is_finite() {
        return Err(domain("score", score, "score must be finite"));
    }
    if !threshold.is_finite() {
        return Err(domain("threshold", threshold, "threshold must be finite"));
    }
    Ok(score >= threshold)
}

fn chunk_len(rounds: u64, chunk: u64) -> u64 {
    (rounds - chunk * CHUNK_ROUNDS).min(CHUNK_ROUNDS)
}

fn count_vacuum(seed: u64, source: &PhotonSource, rounds: u64, chunk: u64) -> u64 {
    let mut photons = substream(seed, Lane::Photons, chunk);
    (0..chunk_len(rounds, chunk)).filter(|_| source.sample(&mut photons) == 0).count() as u64
}

fn run_chunk(
    params: &ProtocolParams,
    role: &Role,
    f: &BooleanFunction,
    source: &PhotonSource,
    seed: u64,
    chunk: u64,
    mut vacuum_rank: u64,
) -> ClassDiagnostics {
    let mut photons = substream(seed, Lane::Photons, chunk);
    let mut challenges: StreamRng = substream(seed, Lane::Challenges, chunk);
    let mut responses = substream(seed, Lane::Responses, chunk);
    let mut diag = ClassDiagnostics::default();
    for _ in 0..chunk_len(params.rounds, chunk) {
        let ch = make_challenge(f, &mut challenges);
        let k = source.sample(&mut photons);
        let response = match role {
            Role::Honest => honest_response_for(k, &ch, &params.channel, &mut responses),
            Role::Adversary(strategy) => adversary_respond(strategy, &ch, k, vacuum_rank, &mut responses),
        };
        if k == 0 {
            vacuum_rank += 1;
        }
        diag.class_mut(PhotonClass::of(k)).record(response, ch.c);
    }
    diag
}

/// Runs an `N`-round session and scores it against Γ₀ for the same `(N, μ, ε, ξ)`.
pub fn run_session(
    params: &ProtocolParams,
    coeffs: &ScoreCoefficients,
    role: &Role,
    f: &BooleanFunction,
    seed: u64,
    exec: Execution,
) -> Result<TrialRecord> {
    params.validate()?;
    coeffs.validate()?;
    if f.width() != params.input_bits {
        return Err(QpvError::Width {
            expected: params.input_bits,
            got: f.width(),
        });
    }
    if let Role::Adversary(s) = role {
        s.validate()?;
    }
    let gamma0 = threshold(params.rounds, params.mu, coeffs, &params.security)?.gamma0;
    let source = PhotonSource::new(params.mu);
    let chunks = params.rounds.div_ceil(CHUNK_ROUNDS);

    let needs_vacuum_rank = matches!(role, Role::Adversary(s) if s.vacuum_quota().is_some_and(|x| x > 0));
    let offsets: Vec<u64> = if needs_vacuum_rank {
        let counts = map_units(exec, chunks, |c| count_vacuum(seed, &source, params.rounds, c));
        counts
            .iter()
            .scan(0u64, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    } else {
        vec![0; chunks as usize]
    };

    let diagnostics = map_units(exec, chunks, |c| {
        run_chunk(params, role, f, &source, seed, c, offsets[c as usize])
    })
    .into_iter()
    .fold(ClassDiagnostics::default(), Add::add);
    let tally = diagnostics.combined();
    let score = score_tally(&tally, coeffs);
    Ok(TrialRecord {
        seed,
        tally,
        score,
        threshold: gamma0,
        passed: verify(score, gamma0)?,
        diagnostics,
    })
}
