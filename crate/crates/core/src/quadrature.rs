//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands on finite intervals.

// Nodes and weights are tabulated beyond double precision.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-15,
            rel: 1e-13,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
}

fn kronrod<const K: usize>(f: &impl Fn(f64) -> [f64; K], a: f64, b: f64) -> Segment<K> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for (i, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[i] * s;
            if i % 2 == 1 {
                gauss[k] += WG[i / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * half;
        error[k] = ((kron[k] - gauss[k]) * half).abs();
    }
    Segment { a, b, value, error }
}

fn converged<const K: usize>(value: &[f64; K], error: &[f64; K], tol: &Tolerance) -> bool {
    value
        .iter()
        .zip(error)
        .all(|(v, e)| *e <= tol.abs.max(tol.rel * v.abs()))
}

/// Integrates `f` over `[a, b]`, splitting first at the given interior
/// break points.
pub fn integrate<const K: usize>(
    f: impl Fn(f64) -> [f64; K],
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate<K>> {
    let mut edges = vec![a];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    edges.extend(interior);
    edges.push(b);

    let mut segments: Vec<Segment<K>> = edges.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();
    loop {
        let mut value = [0.0; K];
        let mut error = [0.0; K];
        for s in &segments {
            for k in 0..K {
                value[k] += s.value[k];
                error[k] += s.error[k];
            }
        }
        if converged(&value, &error, tol) {
            return Ok(Estimate { value, error });
        }
        if segments.len() >= tol.max_intervals {
            let worst = error.iter().copied().fold(0.0, f64::max);
            return Err(Error::Quadrature {
                error: worst,
                intervals: segments.len(),
            });
        }
        // Bisect the segment with the largest error, weighted per component
        // by the component's own tolerance.
        let scale: Vec<f64> = value
            .iter()
            .map(|v| tol.abs.max(tol.rel * v.abs()))
            .collect();
        let (idx, _) = segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                (
                    i,
                    s.error
                        .iter()
                        .zip(&scale)
                        .map(|(e, c)| e / c)
                        .fold(0.0, f64::max),
                )
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("at least one segment");
        let s = segments.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&f, s.a, mid));
        segments.push(kronrod(&f, mid, s.b));
    }
}
