//! Per-link running statistics and the numeric floors used by the cost terms.

use std::collections::VecDeque;

/// Smoothing factor of the per-packet stability estimate.
pub const BETA: f64 = 0.75;
/// Smoothing factor of the windowed stability estimate and of ETX.
pub const ALPHA: f64 = 0.75;
/// Frames kept in the outcome window.
pub const WINDOW: usize = 32;
pub const LS_INITIAL: f64 = 0.5;
pub const LS_FLOOR: f64 = 0.05;
/// Residual-energy floor in joules.
pub const ENERGY_FLOOR_J: f64 = 0.05;

pub fn update_ls_packet(ls_prev: f64, acked: bool) -> f64 {
    let x = if acked { 1.0 } else { 0.0 };
    (BETA * ls_prev + (1.0 - BETA) * x).clamp(0.0, 1.0)
}

/// Windowed form. `txs == 0` leaves the estimate unchanged.
pub fn update_ls_windowed(ls_prev: f64, acks: u32, txs: u32) -> f64 {
    if txs == 0 {
        return ls_prev;
    }
    let ratio = acks.min(txs) as f64 / txs as f64;
    (ALPHA * ls_prev + (1.0 - ALPHA) * ratio).clamp(0.0, 1.0)
}

/// `floor(256 ls)`, clamped into a byte (1.0 maps to 255, not 256).
pub fn quantize_ls(ls: f64) -> u8 {
    (256.0 * ls.clamp(0.0, 1.0)).floor().min(255.0) as u8
}

pub fn dequantize_ls(byte: u8) -> f64 {
    byte as f64 / 256.0
}

pub fn update_etx(etx_prev: f64, attempts: u32) -> f64 {
    (ALPHA * etx_prev + (1.0 - ALPHA) * attempts.max(1) as f64).max(1.0)
}

pub fn safe_residual(e_r: f64) -> f64 {
    e_r.max(ENERGY_FLOOR_J)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    pub ls: f64,
    /// `None` until the first attempt on the link has been observed.
    pub ls_byte: Option<u8>,
    pub etx: f64,
    pub window: VecDeque<bool>,
    pub tx_count: u64,
    pub ack_count: u64,
}

impl Default for LinkStats {
    fn default() -> Self {
        LinkStats {
            ls: LS_INITIAL,
            ls_byte: None,
            etx: 1.0,
            window: VecDeque::with_capacity(WINDOW),
            tx_count: 0,
            ack_count: 0,
        }
    }
}

impl LinkStats {
    /// Records one frame attempt.
    pub fn record_attempt(&mut self, acked: bool) {
        self.ls = update_ls_packet(self.ls, acked);
        self.ls_byte = Some(quantize_ls(self.ls));
        if self.window.len() == WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(acked);
        self.tx_count += 1;
        if acked {
            self.ack_count += 1;
        }
    }

    /// Records a completed delivery that took `attempts` tries.
    pub fn record_delivery(&mut self, attempts: u32) {
        self.etx = update_etx(self.etx, attempts);
    }

    pub fn window_counts(&self) -> (u32, u32) {
        let acks = self.window.iter().filter(|a| **a).count() as u32;
        (acks, self.window.len() as u32)
    }

    /// Stability as used by the cost function: the dequantised byte when
    /// present, else `1 / ETX`, floored at 0.05.
    pub fn ls_for_cost(&self) -> f64 {
        ls_for_cost(self.ls_byte, self.etx)
    }
}

pub fn ls_for_cost(ls_byte: Option<u8>, etx: f64) -> f64 {
    let raw = match ls_byte {
        Some(b) => dequantize_ls(b),
        None => 1.0 / etx.max(1.0),
    };
    raw.clamp(LS_FLOOR, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyState {
    initial: f64,
    residual: f64,
}

impl EnergyState {
    pub fn new(initial: f64) -> Self {
        EnergyState { initial, residual: initial }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn consumed(&self) -> f64 {
        self.initial - self.residual
    }

    /// Debits `joules` (non-negative), saturating at zero. Returns the amount
    /// actually removed.
    pub fn debit(&mut self, joules: f64) -> f64 {
        debug_assert!(joules >= 0.0);
        let take = joules.max(0.0).min(self.residual);
        self.residual -= take;
        take
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_packet_examples() {
        assert_eq!(update_ls_packet(0.5, true), 0.625);
        assert_eq!(update_ls_packet(1.0, true), 1.0);
        assert_eq!(update_ls_packet(0.5, false), 0.375);
    }

    #[test]
    fn windowed_examples() {
        assert_eq!(update_ls_windowed(0.5, 32, 32), 0.625);
        assert!((update_ls_windowed(0.8, 0, 32) - 0.6).abs() < 1e-15);
        assert_eq!(update_ls_windowed(0.3, 0, 0), 0.3);
        let mut x = 0.0;
        for _ in 0..50 {
            x = update_ls_windowed(x, 7, 7);
        }
        assert!((1.0 - x).abs() < 1e-6);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_ls(0.0), 0);
        assert_eq!(quantize_ls(0.5), 128);
        assert_eq!(quantize_ls(1.0), 255);
    }

    #[test]
    fn ls_for_cost_examples() {
        assert_eq!(ls_for_cost(Some(128), 1.0), 0.5);
        assert_eq!(ls_for_cost(Some(0), 1.0), 0.05);
        assert_eq!(ls_for_cost(None, 4.0), 0.25);
    }

    #[test]
    fn etx_examples() {
        assert_eq!(update_etx(1.0, 1), 1.0);
        assert_eq!(update_etx(1.0, 5), 2.0);
        let mut e = 1.0;
        for _ in 0..100 {
            e = update_etx(e, 2);
        }
        assert!((e - 2.0).abs() < 1e-9);
    }

    #[test]
    fn residual_floor() {
        assert_eq!(safe_residual(0.0), 0.05);
        assert_eq!(safe_residual(100.0), 100.0);
        assert_eq!(safe_residual(0.049), 0.05);
    }

    #[test]
    fn window_is_bounded() {
        let mut s = LinkStats::default();
        for i in 0..100 {
            s.record_attempt(i % 3 != 0);
        }
        assert_eq!(s.window.len(), WINDOW);
        assert_eq!(s.tx_count, 100);
        assert_eq!(s.ack_count, 66);
        assert_eq!(s.ls_byte, Some(quantize_ls(s.ls)));
    }

    #[test]
    fn energy_never_negative() {
        let mut e = EnergyState::new(1.0);
        assert_eq!(e.debit(0.4), 0.4);
        assert_eq!(e.debit(5.0), 0.6);
        assert_eq!(e.residual(), 0.0);
        assert_eq!(e.consumed(), 1.0);
    }
}
