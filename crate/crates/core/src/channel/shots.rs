use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::clifford::{CliffordGroup, CLIFFORD_ORDERING, GROUP_SIZE};
use super::spam::SpamModel;
use super::PauliChannel;
use crate::error::{Error, Result};
use crate::pauli::{Pauli1, PauliString};
use crate::rng::{derive, tag, Stream};

const BANK_MAGIC: &str = "#pauli-learn shot bank v1";
const CHUNK: usize = 8192;

/// One run of the randomized circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub clifford_ids: Vec<u8>,
    pub q_in: PauliString,
    pub q_out: PauliString,
    pub k: u32,
    /// Bit `i` is the outcome on qubit `i`.
    pub outcome: u64,
}

impl ShotRecord {
    pub fn n(&self) -> usize {
        self.clifford_ids.len()
    }

    pub fn outcome_bit(&self, q: usize) -> bool {
        self.outcome >> q & 1 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub k: u32,
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankHeader {
    pub n: usize,
    pub seed: u64,
    pub clifford_ordering: String,
    pub spam: SpamModel,
    pub schedule: Vec<ScheduleEntry>,
}

/// All shots sharing one repetition count, stored column-wise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotGroup {
    n: usize,
    k: u32,
    cliffords: Vec<u8>,
    q_in: Vec<(u64, u64)>,
    q_out: Vec<(u64, u64)>,
    outcomes: Vec<u64>,
}

impl ShotGroup {
    fn empty(n: usize, k: u32) -> Self {
        Self {
            n,
            k,
            cliffords: Vec::new(),
            q_in: Vec::new(),
            q_out: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    fn push(&mut self, cliffords: &[u8], q_in: (u64, u64), q_out: (u64, u64), outcome: u64) {
        self.cliffords.extend_from_slice(cliffords);
        self.q_in.push(q_in);
        self.q_out.push(q_out);
        self.outcomes.push(outcome);
    }

    fn append(&mut self, other: ShotGroup) {
        self.cliffords.extend(other.cliffords);
        self.q_in.extend(other.q_in);
        self.q_out.extend(other.q_out);
        self.outcomes.extend(other.outcomes);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn cliffords(&self, j: usize) -> &[u8] {
        &self.cliffords[j * self.n..(j + 1) * self.n]
    }

    /// `(x, z)` masks of the input twirl.
    pub fn q_in_masks(&self, j: usize) -> (u64, u64) {
        self.q_in[j]
    }

    pub fn q_out_masks(&self, j: usize) -> (u64, u64) {
        self.q_out[j]
    }

    pub fn outcome(&self, j: usize) -> u64 {
        self.outcomes[j]
    }

    pub fn record(&self, j: usize) -> ShotRecord {
        let (ix, iz) = self.q_in[j];
        let (ox, oz) = self.q_out[j];
        ShotRecord {
            clifford_ids: self.cliffords(j).to_vec(),
            q_in: PauliString::from_masks(self.n, ix, iz).expect("masks fit"),
            q_out: PauliString::from_masks(self.n, ox, oz).expect("masks fit"),
            k: self.k,
            outcome: self.outcomes[j],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = ShotRecord> + '_ {
        (0..self.len()).map(|j| self.record(j))
    }
}

/// Shots grouped by `k`, in schedule order, plus the run metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotBank {
    header: BankHeader,
    groups: Vec<ShotGroup>,
}

impl ShotBank {
    pub fn new(header: BankHeader, groups: Vec<ShotGroup>) -> Result<Self> {
        validate_schedule(&header.schedule)?;
        if groups.len() != header.schedule.len() {
            return Err(Error::Parse("group count differs from schedule".into()));
        }
        for (g, e) in groups.iter().zip(&header.schedule) {
            if g.n != header.n || g.k != e.k || g.len() as u64 != e.shots {
                return Err(Error::Parse(format!(
                    "group k = {} has {} shots, schedule expects {} at k = {}",
                    g.k,
                    g.len(),
                    e.shots,
                    e.k
                )));
            }
        }
        Ok(Self { header, groups })
    }

    pub fn header(&self) -> &BankHeader {
        &self.header
    }

    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn groups(&self) -> &[ShotGroup] {
        &self.groups
    }

    pub fn group(&self, k: u32) -> Result<&ShotGroup> {
        self.groups
            .iter()
            .find(|g| g.k == k)
            .ok_or(Error::MissingGroup(k))
    }

    pub fn ks(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.k).collect()
    }

    pub fn total_shots(&self) -> u64 {
        self.groups.iter().map(|g| g.len() as u64).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = ShotRecord> + '_ {
        self.groups.iter().flat_map(|g| g.records())
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{BANK_MAGIC}")?;
        writeln!(w, "#{}", serde_json::to_string(&self.header)?)?;
        let n = self.header.n;
        let mut line = String::new();
        for g in &self.groups {
            for j in 0..g.len() {
                line.clear();
                for (q, c) in g.cliffords(j).iter().enumerate() {
                    if q > 0 {
                        line.push(',');
                    }
                    write!(line, "{c}").expect("writing to a String");
                }
                let (ix, iz) = g.q_in[j];
                let (ox, oz) = g.q_out[j];
                write!(
                    line,
                    " {} {} {} ",
                    PauliString::from_masks(n, ix, iz)?,
                    PauliString::from_masks(n, ox, oz)?,
                    g.k
                )
                .expect("writing to a String");
                for q in 0..n {
                    line.push(if g.outcomes[j] >> q & 1 == 1 { '1' } else { '0' });
                }
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn read_from(r: impl std::io::Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let magic = lines.next().transpose()?.unwrap_or_default();
        if magic.trim_end() != BANK_MAGIC {
            return Err(Error::Parse("not a shot bank file".into()));
        }
        let header_line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse("missing shot bank header".into()))?;
        let header: BankHeader = serde_json::from_str(
            header_line
                .strip_prefix('#')
                .ok_or_else(|| Error::Parse("malformed shot bank header".into()))?,
        )?;
        if header.clifford_ordering != CLIFFORD_ORDERING {
            return Err(Error::Parse(format!(
                "unsupported Clifford ordering {}",
                header.clifford_ordering
            )));
        }
        let n = header.n;
        let mut groups: Vec<ShotGroup> = header
            .schedule
            .iter()
            .map(|e| ShotGroup::empty(n, e.k))
            .collect();
        let mut cliffords = Vec::with_capacity(n);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("record {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            if fields.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            cliffords.clear();
            for c in fields[0].split(',') {
                let id: u8 = c.parse().map_err(|_| bad("bad Clifford id"))?;
                if id as usize >= GROUP_SIZE {
                    return Err(bad("Clifford id out of range"));
                }
                cliffords.push(id);
            }
            let q_in: PauliString = fields[1].parse()?;
            let q_out: PauliString = fields[2].parse()?;
            let k: u32 = fields[3].parse().map_err(|_| bad("bad k"))?;
            let bits = fields[4].as_bytes();
            if cliffords.len() != n || q_in.num_qubits() != n || q_out.num_qubits() != n || bits.len() != n {
                return Err(bad("qubit count differs from header"));
            }
            let mut outcome = 0u64;
            for (q, b) in bits.iter().enumerate() {
                match b {
                    b'0' => {}
                    b'1' => outcome |= 1 << q,
                    _ => return Err(bad("bad outcome bit")),
                }
            }
            let g = groups
                .iter_mut()
                .find(|g| g.k == k)
                .ok_or_else(|| bad("k not in schedule"))?;
            g.push(
                &cliffords,
                (q_in.x_mask(), q_in.z_mask()),
                (q_out.x_mask(), q_out.z_mask()),
                outcome,
            );
        }
        Self::new(header, groups)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

fn validate_schedule(schedule: &[ScheduleEntry]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Config("empty shot schedule".into()));
    }
    for (i, e) in schedule.iter().enumerate() {
        if e.k == 0 || e.shots == 0 {
            return Err(Error::Config(format!(
                "schedule entry (k = {}, shots = {}) must have k >= 1 and shots >= 1",
                e.k, e.shots
            )));
        }
        if schedule[..i].iter().any(|f| f.k == e.k) {
            return Err(Error::Config(format!("k = {} appears twice in schedule", e.k)));
        }
    }
    Ok(())
}

fn check_dims(channel: &PauliChannel, spam: &SpamModel) -> Result<()> {
    if spam.n() != channel.n() {
        return Err(Error::Dimension {
            expected: channel.n(),
            found: spam.n(),
        });
    }
    Ok(())
}

fn mask_for(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Runs one shot, writing Clifford ids into `cliffords`. Returns the input
/// and output twirl masks and the outcome bits.
fn simulate_into(
    channel: &PauliChannel,
    spam: &SpamModel,
    k: u32,
    rng: &mut Stream,
    cliffords: &mut [u8],
) -> ((u64, u64), (u64, u64), u64) {
    let n = channel.n();
    let low = mask_for(n);
    for c in cliffords.iter_mut() {
        *c = rng.random_range(0..GROUP_SIZE as u8);
    }
    let q_in = (rng.random::<u64>() & low, rng.random::<u64>() & low);
    let q_out = (rng.random::<u64>() & low, rng.random::<u64>() & low);

    let (mut ex, mut ez) = (0u64, 0u64);
    let apply_local = |ex: &mut u64, ez: &mut u64, q: usize, p: Pauli1| {
        *ex ^= (p.x() as u64) << q;
        *ez ^= (p.z() as u64) << q;
    };
    for (q, ch) in spam.prep.iter().enumerate() {
        apply_local(&mut ex, &mut ez, q, ch.sample(rng));
    }
    ex ^= q_in.0;
    ez ^= q_in.1;
    for _ in 0..k {
        let e = channel.sample_error(rng);
        ex ^= e.x_mask();
        ez ^= e.z_mask();
    }
    ex ^= q_out.0;
    ez ^= q_out.1;
    for (q, ch) in spam.meas.iter().enumerate() {
        apply_local(&mut ex, &mut ez, q, ch.sample(rng));
    }

    let group = CliffordGroup::get();
    let mut outcome = 0u64;
    for (q, &c) in cliffords.iter().enumerate() {
        let e = Pauli1::from_bits(ex >> q & 1 == 1, ez >> q & 1 == 1);
        let p1 = group.flip_probability(c, e);
        let bit = if p1 <= 0.0 {
            false
        } else if p1 >= 1.0 {
            true
        } else {
            rng.random::<f64>() < p1
        };
        outcome |= (bit as u64) << q;
    }
    (q_in, q_out, outcome)
}

/// Simulates `|0> -> C -> Phi1 -> Q_in -> P^k -> Q_out -> Phi2 -> C^dagger`
/// followed by a computational-basis measurement.
pub fn simulate_shot(
    channel: &PauliChannel,
    spam: &SpamModel,
    k: u32,
    rng: &mut Stream,
) -> Result<ShotRecord> {
    check_dims(channel, spam)?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n = channel.n();
    let mut clifford_ids = vec![0u8; n];
    let (q_in, q_out, outcome) = simulate_into(channel, spam, k, rng, &mut clifford_ids);
    Ok(ShotRecord {
        clifford_ids,
        q_in: PauliString::from_masks(n, q_in.0, q_in.1)?,
        q_out: PauliString::from_masks(n, q_out.0, q_out.1)?,
        k,
        outcome,
    })
}

/// The stream used for shot `j` of the group with repetition count `k`.
pub fn shot_stream(seed: u64, k: u32, j: u64) -> Stream {
    derive(seed, &[tag::SHOTS, k as u64, j])
}

fn simulate_range(
    channel: &PauliChannel,
    spam: &SpamModel,
    seed: u64,
    k: u32,
    range: std::ops::Range<u64>,
) -> ShotGroup {
    let n = channel.n();
    let mut g = ShotGroup::empty(n, k);
    let len = (range.end - range.start) as usize;
    g.cliffords.reserve(len * n);
    g.q_in.reserve(len);
    g.q_out.reserve(len);
    g.outcomes.reserve(len);
    let mut cliffords = vec![0u8; n];
    for j in range {
        let mut rng = shot_stream(seed, k, j);
        let (q_in, q_out, outcome) = simulate_into(channel, spam, k, &mut rng, &mut cliffords);
        g.push(&cliffords, q_in, q_out, outcome);
    }
    g
}

/// Simulates every group of `schedule`. Shot `j` of group `k` depends only
/// on `(seed, k, j)`, so the bank is identical however the work is split.
pub fn batch_simulate(
    channel: &PauliChannel,
    spam: &SpamModel,
    schedule: &[ScheduleEntry],
    seed: u64,
) -> Result<ShotBank> {
    check_dims(channel, spam)?;
    validate_schedule(schedule)?;
    let n = channel.n();
    let mut groups = Vec::with_capacity(schedule.len());
    for e in schedule {
        let chunks: Vec<std::ops::Range<u64>> = (0..e.shots)
            .step_by(CHUNK)
            .map(|s| s..(s + CHUNK as u64).min(e.shots))
            .collect();
        #[cfg(feature = "parallel")]
        let parts: Vec<ShotGroup> = {
            use rayon::prelude::*;
            chunks
                .into_par_iter()
                .map(|r| simulate_range(channel, spam, seed, e.k, r))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<ShotGroup> = chunks
            .into_iter()
            .map(|r| simulate_range(channel, spam, seed, e.k, r))
            .collect();
        let mut group = ShotGroup::empty(n, e.k);
        for p in parts {
            group.append(p);
        }
        groups.push(group);
    }
    ShotBank::new(
        BankHeader {
            n,
            seed,
            clifford_ordering: CLIFFORD_ORDERING.to_string(),
            spam: spam.clone(),
            schedule: schedule.to_vec(),
        },
        groups,
    )
}

/// Same as [`batch_simulate`] but single-threaded regardless of features.
pub fn batch_simulate_serial(
    channel: &PauliChannel,
    spam: &SpamModel,
    schedule: &[ScheduleEntry],
    seed: u64,
) -> Result<ShotBank> {
    check_dims(channel, spam)?;
    validate_schedule(schedule)?;
    let n = channel.n();
    let groups = schedule
        .iter()
        .map(|e| simulate_range(channel, spam, seed, e.k, 0..e.shots))
        .collect();
    ShotBank::new(
        BankHeader {
            n,
            seed,
            clifford_ordering: CLIFFORD_ORDERING.to_string(),
            spam: spam.clone(),
            schedule: schedule.to_vec(),
        },
        groups,
    )
}
