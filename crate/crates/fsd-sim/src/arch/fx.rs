//! 12-bit two's-complement saturating fixed-point arithmetic of the FSD
//! datapath: shift-add symbol multipliers, the PED step and the direct
//! enumeration compare.

pub const WORD_BITS: u32 = 12;
pub const RAW_MIN: i32 = -(1 << (WORD_BITS - 1)); // -2048
pub const RAW_MAX: i32 = (1 << (WORD_BITS - 1)) - 1; // 2047
pub const DEFAULT_FRAC_BITS: u8 = 7;

/// The 16-QAM real alphabet as datapath integers, ascending.
pub const SYMBOLS: [i8; 4] = [-3, -1, 1, 3];

/// A 12-bit two's-complement word with a binary point at `frac_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedWord {
    raw: i16,
    frac_bits: u8,
}

impl FixedWord {
    /// Build from a raw integer, saturating into the 12-bit range.
    pub fn from_raw(raw: i32, frac_bits: u8) -> FixedWord {
        FixedWord {
            raw: raw.clamp(RAW_MIN, RAW_MAX) as i16,
            frac_bits,
        }
    }

    /// Round-to-nearest quantization of a real value; the flag reports
    /// saturation.
    pub fn quantize(x: f64, frac_bits: u8) -> (FixedWord, bool) {
        let scaled = (x * f64::from(1u32 << frac_bits)).round();
        let saturated = scaled < RAW_MIN as f64 || scaled > RAW_MAX as f64;
        (
            FixedWord::from_raw(scaled.clamp(RAW_MIN as f64, RAW_MAX as f64) as i32, frac_bits),
            saturated,
        )
    }

    pub fn zero(frac_bits: u8) -> FixedWord {
        FixedWord { raw: 0, frac_bits }
    }

    /// Largest representable word (the PED saturation target).
    pub fn max_value(frac_bits: u8) -> FixedWord {
        FixedWord {
            raw: RAW_MAX as i16,
            frac_bits,
        }
    }

    pub fn raw(self) -> i16 {
        self.raw
    }

    pub fn frac_bits(self) -> u8 {
        self.frac_bits
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.raw) / f64::from(1u32 << self.frac_bits)
    }
}

/// r * s for s in {+-1, +-3}, via negate and shift-add only
/// (r + 2r, r, -r, -r - 2r), saturating once at the end.
pub fn fx_mul_sym(r: FixedWord, sym: i8) -> FixedWord {
    let raw = i32::from(r.raw);
    let product = match sym {
        1 => raw,
        -1 => -raw,
        3 => raw + (raw << 1),
        -3 => -raw - (raw << 1),
        _ => panic!("symbol {sym} is not in the 16-QAM real alphabet"),
    };
    FixedWord::from_raw(product, r.frac_bits)
}

/// One PED step: e = b - r_ii * s with 13-bit headroom, then
/// d = d_prev + e^2 with a single saturation on the final sum.
pub fn fx_ped_step(d_prev: FixedWord, b: FixedWord, r_ii: FixedWord, sym: i8) -> FixedWord {
    let e = i32::from(b.raw) - i32::from(fx_mul_sym(r_ii, sym).raw);
    // e^2 is a Q(2f) value; realign to Q(f). e^2 >= 0, so the shift is a floor.
    let sq = (i64::from(e) * i64::from(e)) >> d_prev.frac_bits;
    let d = i64::from(d_prev.raw) + sq;
    FixedWord::from_raw(d.clamp(RAW_MIN as i64, RAW_MAX as i64) as i32, d_prev.frac_bits)
}

/// b = y - sum_j r_j * s_j. The products stay as exact wide integers (the
/// hardware keeps the shift-add summands separate through the compressor
/// tree) and the result saturates once when written back to the cache.
pub fn fx_b_value(y: FixedWord, terms: &[(FixedWord, i8)]) -> FixedWord {
    let mut acc = i64::from(y.raw);
    for &(r, s) in terms {
        acc -= i64::from(r.raw) * i64::from(s);
    }
    FixedWord::from_raw(acc.clamp(RAW_MIN as i64, RAW_MAX as i64) as i32, y.frac_bits)
}

/// Direct enumeration in fixed point: the alphabet symbol minimizing
/// |b - r_ii * s|, compared on the exact 13-bit differences, ties toward the
/// smaller symbol.
pub fn fx_direct_enumerate(b: FixedWord, r_ii: FixedWord) -> i8 {
    let mut best = SYMBOLS[0];
    let mut best_e = fx_abs_e(b, r_ii, SYMBOLS[0]);
    for &s in &SYMBOLS[1..] {
        let e = fx_abs_e(b, r_ii, s);
        if e < best_e {
            best = s;
            best_e = e;
        }
    }
    best
}

fn fx_abs_e(b: FixedWord, r_ii: FixedWord, sym: i8) -> i32 {
    (i32::from(b.raw) - i32::from(fx_mul_sym(r_ii, sym).raw)).abs()
}
