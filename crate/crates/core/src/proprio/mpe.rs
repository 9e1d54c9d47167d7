use serde::{Deserialize, Serialize};

use crate::world::ObservationFrame;

/// `(t, sign(y - y_r), sign(x - x_r))` for one observation token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[i64; 3]", try_from = "[i64; 3]")]
pub struct MpeIndex {
    pub t: i64,
    pub sy: i8,
    pub sx: i8,
}

impl From<MpeIndex> for [i64; 3] {
    fn from(m: MpeIndex) -> Self {
        [m.t, m.sy as i64, m.sx as i64]
    }
}

impl TryFrom<[i64; 3]> for MpeIndex {
    type Error = String;

    fn try_from(v: [i64; 3]) -> Result<Self, Self::Error> {
        let sign = |s: i64| match s {
            -1..=1 => Ok(s as i8),
            _ => Err(format!("spatial component {s} outside -1..=1")),
        };
        Ok(MpeIndex { t: v[0], sy: sign(v[1])?, sx: sign(v[2])? })
    }
}

fn sign(v: i64) -> i8 {
    v.signum() as i8
}

pub fn mpe_index(t: i64, x: i64, y: i64, centroid: (i64, i64)) -> MpeIndex {
    let (xr, yr) = centroid;
    MpeIndex { t, sy: sign(y - yr), sx: sign(x - xr) }
}

/// Index for every token of the observation crop, same layout as
/// `token_grid`, with `t` the frame tick.
pub fn mpe_grid(obs: &ObservationFrame) -> Vec<Vec<MpeIndex>> {
    let (xr, yr) = obs.robot_centroid;
    let t = obs.tick as i64;
    obs.token_grid
        .iter()
        .enumerate()
        .map(|(y, row)| (0..row.len()).map(|x| mpe_index(t, x as i64, y as i64, (xr as i64, yr as i64))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        assert_eq!(mpe_index(3, 10, 2, (4, 6)), MpeIndex { t: 3, sy: -1, sx: 1 });
    }

    #[test]
    fn centroid_is_zero() {
        assert_eq!(mpe_index(9, 4, 6, (4, 6)), MpeIndex { t: 9, sy: 0, sx: 0 });
    }

    #[test]
    fn wire_form_is_a_triple() {
        let m = mpe_index(2, 0, 5, (1, 1));
        assert_eq!(serde_json::to_string(&m).unwrap(), "[2,1,-1]");
        assert!(serde_json::from_str::<MpeIndex>("[2,3,0]").is_err());
    }
}
