//! Binary checkpoint container.
//!
//! ```text
//! magic "OCULORL\0" | version u32 | sections... | sha256 of everything before
//! section = tag [u8; 4] | length u64 | payload
//! ```
//!
//! All integers and floats are little-endian; floats are stored as raw
//! IEEE-754 bits so a round trip is exact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::ddpg::{Agent, MilestoneRecord, OuNoise, ReplayBuffer, Transition};
use crate::env::{ActionVector, Observation, ACTION_DIM, OBS_DIM};
use crate::error::CheckpointError;
use crate::netcore::{Activation, Actor, Adam, Critic, Layer, Mlp};

pub const MAGIC: &[u8; 8] = b"OCULORL\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 12;
const DIGEST_LEN: usize = 32;

const TAG_META: &[u8; 4] = b"META";
const TAG_AGENT: &[u8; 4] = b"AGNT";
const TAG_NOISE: &[u8; 4] = b"NOIS";
const TAG_SAMPLER: &[u8; 4] = b"SRNG";
const TAG_HISTORY: &[u8; 4] = b"HIST";
const TAG_MILESTONES: &[u8; 4] = b"MILE";
const TAG_REPLAY: &[u8; 4] = b"RPLY";

/// Everything needed to resume training bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub label: String,
    pub created_by: String,
    pub seed: u64,
    pub episodes_done: u64,
    pub agent: Agent,
    pub noise: OuNoise,
    pub sampler: RngState,
    /// Per-episode cumulative rewards so far.
    pub history: Vec<f64>,
    pub best: Option<f64>,
    pub milestones: Vec<MilestoneRecord>,
    pub replay: Option<ReplaySnapshot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySnapshot {
    pub capacity: u64,
    pub cursor: u64,
    pub items: Vec<Transition>,
}

impl ReplaySnapshot {
    pub fn capture(buffer: &ReplayBuffer) -> Self {
        ReplaySnapshot {
            capacity: buffer.capacity() as u64,
            cursor: buffer.cursor() as u64,
            items: buffer.items().to_vec(),
        }
    }

    pub fn restore(&self, rng: ChaCha8Rng) -> Result<ReplayBuffer, CheckpointError> {
        ReplayBuffer::from_parts(self.capacity as usize, self.items.clone(), self.cursor as usize, rng)
            .ok_or_else(|| CheckpointError::Format("inconsistent replay buffer section".into()))
    }
}

pub fn save(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let bytes = encode(ckpt);
    let tmp = path.with_extension("ckpt.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&std::fs::read(path)?)
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    let mut w = Writer::default();
    w.str(&ckpt.label);
    w.str(&ckpt.created_by);
    w.u64(ckpt.seed);
    w.u64(ckpt.episodes_done);
    section(&mut out, TAG_META, w);

    let mut w = Writer::default();
    let a = &ckpt.agent;
    for net in [&a.actor.net, &a.critic.net, &a.actor_target.net, &a.critic_target.net] {
        w.mlp(net);
    }
    w.adam(&a.actor_opt);
    w.adam(&a.critic_opt);
    w.f64(a.gamma);
    w.f64(a.tau);
    section(&mut out, TAG_AGENT, w);

    let mut w = Writer::default();
    let n = &ckpt.noise;
    for v in [n.theta, n.mu, n.sigma, n.dt] {
        w.f64(v);
    }
    w.f64s(&n.state);
    section(&mut out, TAG_NOISE, w);

    let mut w = Writer::default();
    w.bytes(&ckpt.sampler.seed);
    w.u64(ckpt.sampler.stream);
    w.bytes(&ckpt.sampler.word_pos.to_le_bytes());
    section(&mut out, TAG_SAMPLER, w);

    let mut w = Writer::default();
    w.u64(ckpt.history.len() as u64);
    w.f64s(&ckpt.history);
    match ckpt.best {
        Some(b) => {
            w.u8(1);
            w.f64(b);
        }
        None => w.u8(0),
    }
    section(&mut out, TAG_HISTORY, w);

    let mut w = Writer::default();
    w.u64(ckpt.milestones.len() as u64);
    for m in &ckpt.milestones {
        w.u64(m.index as u64);
        w.u64(m.episode as u64);
        w.f64(m.rolling_mean);
        w.str(&m.checkpoint.to_string_lossy());
    }
    section(&mut out, TAG_MILESTONES, w);

    if let Some(r) = &ckpt.replay {
        let mut w = Writer::default();
        w.u64(r.capacity);
        w.u64(r.cursor);
        w.u64(r.items.len() as u64);
        for t in &r.items {
            w.f64s(&t.s.0);
            w.f64s(&t.a.0);
            w.f64(t.r);
            w.f64s(&t.s_next.0);
            w.u8(t.done as u8);
        }
        section(&mut out, TAG_REPLAY, w);
    }

    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(CheckpointError::CorruptChecksum);
    }
    if &bytes[..8] != MAGIC {
        return Err(CheckpointError::Format("not a checkpoint file".into()));
    }
    let (payload, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(CheckpointError::CorruptChecksum);
    }
    let version = u32::from_le_bytes(payload[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let mut sections = BTreeMap::new();
    let mut r = Reader::new(&payload[HEADER_LEN..]);
    while !r.is_empty() {
        let tag: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        let len = r.len_prefix(1)?;
        let body = r.take(len)?;
        if sections.insert(tag, body).is_some() {
            return Err(fmt(format!("duplicate section {}", String::from_utf8_lossy(&tag))));
        }
    }
    let mut get = |tag: &[u8; 4]| {
        sections
            .remove(tag)
            .map(Reader::new)
            .ok_or_else(|| fmt(format!("missing section {}", String::from_utf8_lossy(tag))))
    };

    let mut m = get(TAG_META)?;
    let label = m.str()?;
    let created_by = m.str()?;
    let seed = m.u64()?;
    let episodes_done = m.u64()?;
    m.finish()?;

    let mut a = get(TAG_AGENT)?;
    let actor = Actor::from_net(a.mlp()?).map_err(|e| fmt(e.to_string()))?;
    let critic = Critic::from_net(a.mlp()?).map_err(|e| fmt(e.to_string()))?;
    let actor_target = Actor::from_net(a.mlp()?).map_err(|e| fmt(e.to_string()))?;
    let critic_target = Critic::from_net(a.mlp()?).map_err(|e| fmt(e.to_string()))?;
    if actor_target.net.sizes() != actor.net.sizes() || critic_target.net.sizes() != critic.net.sizes() {
        return Err(fmt("target network shapes differ from main networks".into()));
    }
    let actor_opt = a.adam()?;
    let critic_opt = a.adam()?;
    check_adam(&actor_opt, &actor.net)?;
    check_adam(&critic_opt, &critic.net)?;
    let gamma = a.f64()?;
    let tau = a.f64()?;
    a.finish()?;
    let agent = Agent {
        actor,
        critic,
        actor_target,
        critic_target,
        actor_opt,
        critic_opt,
        gamma,
        tau,
    };

    let mut n = get(TAG_NOISE)?;
    let mut noise = OuNoise::new(n.f64()?, 0.0, 1.0);
    noise.mu = n.f64()?;
    noise.sigma = n.f64()?;
    noise.dt = n.f64()?;
    noise.state = n.f64_array()?;
    n.finish()?;

    let mut s = get(TAG_SAMPLER)?;
    let sampler = RngState {
        seed: s.take(32)?.try_into().expect("32 bytes"),
        stream: s.u64()?,
        word_pos: u128::from_le_bytes(s.take(16)?.try_into().expect("16 bytes")),
    };
    s.finish()?;

    let mut h = get(TAG_HISTORY)?;
    let len = h.len_prefix(8)?;
    let history = h.f64s(len)?;
    let best = match h.u8()? {
        0 => None,
        1 => Some(h.f64()?),
        other => return Err(fmt(format!("bad option flag {other}"))),
    };
    h.finish()?;

    let mut ms = get(TAG_MILESTONES)?;
    let count = ms.len_prefix(28)?;
    let mut milestones = Vec::with_capacity(count);
    for _ in 0..count {
        milestones.push(MilestoneRecord {
            index: ms.usize()?,
            episode: ms.usize()?,
            rolling_mean: ms.f64()?,
            checkpoint: PathBuf::from(ms.str()?),
        });
    }
    ms.finish()?;

    let replay = match sections.remove(TAG_REPLAY) {
        None => None,
        Some(body) => {
            let mut r = Reader::new(body);
            let capacity = r.u64()?;
            let cursor = r.u64()?;
            let count = r.len_prefix(TRANSITION_BYTES)?;
            let mut items = Vec::with_capacity(count);
            for _ in 0..count {
                let s = Observation(r.f64_array()?);
                let a = ActionVector(r.f64_array()?);
                let reward = r.f64()?;
                let s_next = Observation(r.f64_array()?);
                let done = match r.u8()? {
                    0 => false,
                    1 => true,
                    other => return Err(fmt(format!("bad done flag {other}"))),
                };
                items.push(Transition {
                    s,
                    a,
                    r: reward,
                    s_next,
                    done,
                });
            }
            r.finish()?;
            let snap = ReplaySnapshot { capacity, cursor, items };
            snap.restore(sampler.restore())?;
            Some(snap)
        }
    };
    if let Some(tag) = sections.keys().next() {
        return Err(fmt(format!("unknown section {}", String::from_utf8_lossy(tag))));
    }

    Ok(Checkpoint {
        label,
        created_by,
        seed,
        episodes_done,
        agent,
        noise,
        sampler,
        history,
        best,
        milestones,
        replay,
    })
}

/// Loads only the policy network of a checkpoint.
pub fn load_actor(path: &Path) -> Result<Actor, CheckpointError> {
    load(path).map(|c| c.agent.actor)
}

const TRANSITION_BYTES: usize = (2 * OBS_DIM + ACTION_DIM + 1) * 8 + 1;

fn fmt(msg: String) -> CheckpointError {
    CheckpointError::Format(msg)
}

fn check_adam(adam: &Adam, net: &Mlp) -> Result<(), CheckpointError> {
    let lens: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
    let m: Vec<usize> = adam.m.iter().map(Vec::len).collect();
    if lens != m {
        return Err(fmt("optimiser state does not match network shapes".into()));
    }
    Ok(())
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], w: Writer) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(w.0.len() as u64).to_le_bytes());
    out.extend_from_slice(&w.0);
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }

    fn mlp(&mut self, net: &Mlp) {
        self.u32(net.layers.len() as u32);
        for l in &net.layers {
            self.u32(l.inputs() as u32);
            self.u32(l.outputs() as u32);
            self.u8(l.activation.tag());
            self.f64s(l.weight.as_slice().expect("standard layout"));
            self.f64s(l.bias.as_slice().expect("standard layout"));
        }
    }

    fn adam(&mut self, a: &Adam) {
        for v in [a.lr, a.beta1, a.beta2, a.eps] {
            self.f64(v);
        }
        self.u64(a.t);
        self.u32(a.m.len() as u32);
        for (m, v) in a.m.iter().zip(&a.v) {
            self.u64(m.len() as u64);
            self.f64s(m);
            self.f64s(v);
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data }
    }

    fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn finish(&self) -> Result<(), CheckpointError> {
        if self.data.is_empty() {
            Ok(())
        } else {
            Err(fmt(format!("{} trailing bytes in section", self.data.len())))
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if n > self.data.len() {
            return Err(fmt("unexpected end of section".into()));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize, CheckpointError> {
        usize::try_from(self.u64()?).map_err(|_| fmt("count out of range".into()))
    }

    /// A u64 count whose elements take at least `elem_bytes` each, checked
    /// against the bytes left so corrupt counts cannot force huge allocations.
    fn len_prefix(&mut self, elem_bytes: usize) -> Result<usize, CheckpointError> {
        let n = self.usize()?;
        if n.checked_mul(elem_bytes).is_none_or(|b| b > self.data.len()) {
            return Err(fmt(format!("count {n} exceeds remaining data")));
        }
        Ok(n)
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| fmt("length overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn f64_array<const N: usize>(&mut self) -> Result<[f64; N], CheckpointError> {
        let v = self.f64s(N)?;
        Ok(v.try_into().expect("N values"))
    }

    fn str(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| fmt("string is not UTF-8".into()))
    }

    fn mlp(&mut self) -> Result<Mlp, CheckpointError> {
        let n = self.u32()? as usize;
        if n == 0 || n > 64 {
            return Err(fmt(format!("implausible layer count {n}")));
        }
        let mut layers = Vec::with_capacity(n);
        let mut prev_out = None;
        for _ in 0..n {
            let inputs = self.u32()? as usize;
            let outputs = self.u32()? as usize;
            if inputs == 0 || outputs == 0 || prev_out.is_some_and(|p| p != inputs) {
                return Err(fmt("layer shapes do not chain".into()));
            }
            prev_out = Some(outputs);
            let activation =
                Activation::from_tag(self.u8()?).ok_or_else(|| fmt("unknown activation tag".into()))?;
            let count = inputs.checked_mul(outputs).ok_or_else(|| fmt("layer too large".into()))?;
            let weight = Array2::from_shape_vec((inputs, outputs), self.f64s(count)?).expect("shape matches count");
            let bias = Array1::from_vec(self.f64s(outputs)?);
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        Ok(Mlp { layers })
    }

    fn adam(&mut self) -> Result<Adam, CheckpointError> {
        let lr = self.f64()?;
        let mut adam = Adam::new(&[], lr);
        adam.beta1 = self.f64()?;
        adam.beta2 = self.f64()?;
        adam.eps = self.f64()?;
        adam.t = self.u64()?;
        let n = self.u32()? as usize;
        for _ in 0..n {
            let len = self.len_prefix(16)?;
            adam.m.push(self.f64s(len)?);
            adam.v.push(self.f64s(len)?);
        }
        Ok(adam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::{stream, Domain};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};

    fn sample_checkpoint(with_replay: bool) -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = Agent::new(&[8, 8, 8], &[8, 8, 8], 1e-3, 1e-3, 0.96, 0.001, &mut rng);
        agent.actor_opt.t = 17;
        agent.critic_opt.m[0][3] = 0.25;
        let mut noise = OuNoise::new(0.15, 0.2, 1.0);
        noise.state[4] = -0.125;
        let mut sampler = stream(3, Domain::ReplaySampling, 0);
        let _: u64 = sampler.random();
        let replay = with_replay.then(|| ReplaySnapshot {
            capacity: 5,
            cursor: 2,
            items: (0..2)
                .map(|i| Transition {
                    s: Observation([i as f64; OBS_DIM]),
                    a: ActionVector([0.5; ACTION_DIM]),
                    r: -1.5,
                    s_next: Observation([0.1; OBS_DIM]),
                    done: i == 1,
                })
                .collect(),
        });
        Checkpoint {
            label: "final".into(),
            created_by: "test".into(),
            seed: 3,
            episodes_done: 12,
            agent,
            noise,
            sampler: RngState::capture(&sampler),
            history: vec![-3.0, -2.5, f64::MIN_POSITIVE],
            best: Some(-2.75),
            milestones: vec![MilestoneRecord {
                index: 1,
                episode: 10,
                rolling_mean: -2.75,
                checkpoint: PathBuf::from("m1_10.ckpt"),
            }],
            replay,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for with_replay in [false, true] {
            let c = sample_checkpoint(with_replay);
            assert_eq!(decode(&encode(&c)).unwrap(), c);
        }
    }

    #[test]
    fn round_trip_preserves_forward_outputs() {
        let c = sample_checkpoint(false);
        let back = decode(&encode(&c)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let states = Array2::from_shape_fn((100, OBS_DIM), |_| rng.random_range(-1.0..1.0));
        let (a, _) = c.agent.actor.forward(states.view()).unwrap();
        let (b, _) = back.agent.actor.forward(states.view()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            c.agent.critic.q(states.view(), a.view()).unwrap(),
            back.agent.critic.q(states.view(), b.view()).unwrap()
        );
    }

    #[test]
    fn sampler_state_resumes_stream() {
        let c = sample_checkpoint(false);
        let mut orig = stream(3, Domain::ReplaySampling, 0);
        let _: u64 = orig.random();
        let mut restored = c.sampler.restore();
        for _ in 0..10 {
            assert_eq!(orig.random::<u64>(), restored.random::<u64>());
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = encode(&sample_checkpoint(true));
        for cut in [0, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(CheckpointError::CorruptChecksum)), "cut {cut}");
        }
    }

    #[test]
    fn bit_flip_is_detected() {
        let mut bytes = encode(&sample_checkpoint(false));
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        assert!(matches!(decode(&bytes), Err(CheckpointError::CorruptChecksum)));
    }

    #[test]
    fn other_version_is_rejected() {
        let mut bytes = encode(&sample_checkpoint(false));
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        let n = bytes.len() - DIGEST_LEN;
        let digest = Sha256::digest(&bytes[..n]);
        bytes[n..].copy_from_slice(&digest);
        assert!(matches!(
            decode(&bytes),
            Err(CheckpointError::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        let c = sample_checkpoint(true);
        save(&c, &path).unwrap();
        assert_eq!(load(&path).unwrap(), c);
        assert!(matches!(load(&dir.path().join("missing.ckpt")), Err(CheckpointError::Io(_))));
    }
}
