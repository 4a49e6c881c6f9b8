//! File formats: channel documents, serialized protocol plans, and the
//! CSV verification tables.
//!
//! All JSON goes through `serde_json::Value`, whose map keys are sorted;
//! parsing a rendered document and re-rendering it reproduces the bytes
//! exactly (floats use the shortest round-trip representation).

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::protocol::{ProtocolPlan, Round, StatePairTransform};
use crate::simulator::{Lemma2Row, Thm4Row};
use crate::state::{DensityOperator, PureState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Completeness residual beyond which a channel file is rejected at parse
/// time (CLI `--allow-invalid` overrides).
pub const FILE_RESIDUAL_TOL: f64 = 1e-6;

type WireEntry = [f64; 2];
type WireRow = Vec<WireEntry>;
type WireMatrix = Vec<WireRow>;
type WireState = Vec<WireEntry>;

#[derive(Serialize, Deserialize)]
struct ChannelWire {
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    kraus: Vec<WireMatrix>,
}

#[derive(Serialize, Deserialize)]
struct TransformWire {
    kraus: Vec<WireMatrix>,
    source_a: WireMatrix,
    source_b: WireState,
    target_a: WireState,
    target_b: WireState,
}

#[derive(Serialize, Deserialize)]
struct RoundWire {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pre_transform: Option<TransformWire>,
    input_if_e: WireState,
    input_if_i: WireState,
    predicted_overlap_after: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanWire {
    channel: ChannelWire,
    rounds: Vec<RoundWire>,
    final_measurement_vector: WireState,
    claimed_queries: usize,
}

fn matrix_to_wire(m: &CMatrix) -> WireMatrix {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

fn wire_to_matrix(wire: &WireMatrix, dim: usize, what: &str) -> Result<CMatrix> {
    if wire.len() != dim {
        return Err(Error::Parse(format!(
            "{what}: expected {dim} rows, found {}",
            wire.len()
        )));
    }
    for (i, row) in wire.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Parse(format!(
                "{what}: row {i} has {} entries, expected {dim} (non-square or ragged)",
                row.len()
            )));
        }
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        Complex64::new(wire[r][c][0], wire[r][c][1])
    }))
}

fn state_to_wire(s: &PureState) -> WireState {
    s.amplitudes().iter().map(|a| [a.re, a.im]).collect()
}

fn wire_to_state(wire: &WireState, dim: usize, what: &str) -> Result<PureState> {
    if wire.len() != dim {
        return Err(Error::Parse(format!(
            "{what}: expected {dim} amplitudes, found {}",
            wire.len()
        )));
    }
    let v = CVector::from_fn(dim, |i, _| Complex64::new(wire[i][0], wire[i][1]));
    PureState::new(v).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// Serializes any value as canonical pretty JSON (sorted keys, trailing
/// newline).
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("value renders");
    s.push('\n');
    s
}

/// A parsed channel document: shape-checked, with the completeness gate
/// applied, but not yet bound by the stricter channel-type invariant.
#[derive(Debug, Clone)]
pub struct ChannelFile {
    pub dim: usize,
    pub name: Option<String>,
    pub kraus: Vec<CMatrix>,
}

impl ChannelFile {
    pub fn from_channel(channel: &KrausChannel) -> Self {
        Self {
            dim: channel.dim(),
            name: channel.name().map(str::to_owned),
            kraus: channel.kraus().to_vec(),
        }
    }

    /// Constructs the channel, enforcing the full type invariant
    /// (completeness within 1e-9).
    pub fn into_channel(self) -> Result<KrausChannel> {
        KrausChannel::new(self.kraus, self.name)
    }

    pub fn to_json(&self) -> String {
        let wire = ChannelWire {
            dim: self.dim,
            name: self.name.clone(),
            kraus: self.kraus.iter().map(matrix_to_wire).collect(),
        };
        to_canonical_json(&wire)
    }
}

/// Parses a channel document, rejecting non-square matrices, ragged
/// arrays, and (unless `allow_invalid`) completeness residual beyond
/// [`FILE_RESIDUAL_TOL`].
pub fn parse_channel_file(text: &str, allow_invalid: bool) -> Result<ChannelFile> {
    let wire: ChannelWire =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel file: {e}")))?;
    if wire.dim == 0 {
        return Err(Error::Parse("channel file: dim must be positive".into()));
    }
    if wire.kraus.is_empty() {
        return Err(Error::Parse("channel file: empty Kraus list".into()));
    }
    let kraus = wire
        .kraus
        .iter()
        .enumerate()
        .map(|(i, m)| wire_to_matrix(m, wire.dim, &format!("Kraus operator {i}")))
        .collect::<Result<Vec<_>>>()?;
    if !allow_invalid {
        let validity = crate::channel::validate_channel(&kraus)?;
        if validity.completeness_residual > FILE_RESIDUAL_TOL {
            return Err(Error::Parse(format!(
                "channel file: completeness residual {:.3e} exceeds {FILE_RESIDUAL_TOL:.0e}",
                validity.completeness_residual
            )));
        }
    }
    Ok(ChannelFile {
        dim: wire.dim,
        name: wire.name,
        kraus,
    })
}

fn transform_to_wire(t: &StatePairTransform) -> TransformWire {
    TransformWire {
        kraus: t.kraus().iter().map(matrix_to_wire).collect(),
        source_a: matrix_to_wire(t.source_a().matrix()),
        source_b: state_to_wire(t.source_b()),
        target_a: state_to_wire(t.target_a()),
        target_b: state_to_wire(t.target_b()),
    }
}

fn wire_to_transform(wire: &TransformWire, dim: usize) -> Result<StatePairTransform> {
    let kraus = wire
        .kraus
        .iter()
        .enumerate()
        .map(|(i, m)| wire_to_matrix(m, dim, &format!("transform Kraus {i}")))
        .collect::<Result<Vec<_>>>()?;
    let source_a = DensityOperator::new(wire_to_matrix(&wire.source_a, dim, "transform source_a")?)
        .map_err(|e| Error::Parse(format!("transform source_a: {e}")))?;
    StatePairTransform::from_parts(
        kraus,
        source_a,
        wire_to_state(&wire.source_b, dim, "transform source_b")?,
        wire_to_state(&wire.target_a, dim, "transform target_a")?,
        wire_to_state(&wire.target_b, dim, "transform target_b")?,
    )
}

/// Serializes a protocol plan (states as `[re, im]` amplitude arrays,
/// transforms as Kraus lists).
pub fn plan_to_json(plan: &ProtocolPlan) -> String {
    let wire = PlanWire {
        channel: ChannelWire {
            dim: plan.channel.dim(),
            name: plan.channel.name().map(str::to_owned),
            kraus: plan.channel.kraus().iter().map(matrix_to_wire).collect(),
        },
        rounds: plan
            .rounds
            .iter()
            .map(|r| RoundWire {
                index: r.index,
                pre_transform: r.pre_transform.as_ref().map(transform_to_wire),
                input_if_e: state_to_wire(&r.input_if_e),
                input_if_i: state_to_wire(&r.input_if_i),
                predicted_overlap_after: r.predicted_overlap_after,
            })
            .collect(),
        final_measurement_vector: state_to_wire(&plan.final_measurement_vector),
        claimed_queries: plan.claimed_queries,
    };
    to_canonical_json(&wire)
}

/// Parses a serialized plan and re-verifies every plan and transform
/// invariant.
pub fn parse_plan(text: &str) -> Result<ProtocolPlan> {
    let wire: PlanWire =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("plan file: {e}")))?;
    let dim = wire.channel.dim;
    let kraus = wire
        .channel
        .kraus
        .iter()
        .enumerate()
        .map(|(i, m)| wire_to_matrix(m, dim, &format!("channel Kraus {i}")))
        .collect::<Result<Vec<_>>>()?;
    let channel = KrausChannel::new(kraus, wire.channel.name.clone())?;
    let rounds = wire
        .rounds
        .iter()
        .map(|r| {
            Ok(Round {
                index: r.index,
                pre_transform: r
                    .pre_transform
                    .as_ref()
                    .map(|t| wire_to_transform(t, dim))
                    .transpose()?,
                input_if_e: wire_to_state(&r.input_if_e, dim, "round input_if_e")?,
                input_if_i: wire_to_state(&r.input_if_i, dim, "round input_if_i")?,
                predicted_overlap_after: r.predicted_overlap_after,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = ProtocolPlan {
        channel,
        rounds,
        final_measurement_vector: wire_to_state(
            &wire.final_measurement_vector,
            dim,
            "final measurement vector",
        )?,
        claimed_queries: wire.claimed_queries,
    };
    plan.verify()?;
    Ok(plan)
}

/// Ten-significant-digit scientific rendering used by all numeric tables.
pub fn format_sig10(x: f64) -> String {
    format!("{x:.9e}")
}

/// CSV table for a Theorem-4 sweep, with the soundness caveat up front.
pub fn thm4_csv(rows: &[Thm4Row]) -> String {
    let mut out = String::new();
    out.push_str("# sampling can only falsify the bound, never prove it\n");
    out.push_str("q,bound,min_sampled,violated\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_sig10(row.q),
            format_sig10(row.bound),
            format_sig10(row.min_sampled),
            row.violated
        ));
    }
    out
}

/// CSV table for a Lemma-2 constructive check.
pub fn lemma2_csv(rows: &[Lemma2Row]) -> String {
    let mut out = String::new();
    out.push_str("alpha,bound,achieved,violated\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_sig10(row.alpha),
            format_sig10(row.bound),
            format_sig10(row.achieved),
            row.violated
        ));
    }
    out
}
