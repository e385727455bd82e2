//! Published precision, recall and F_β triples of fourteen detectors on the
//! ORSSD test set, as reported, to four decimals.

pub const ROWS: [(&str, f64, f64, f64); 14] = [
    ("RBD", 0.7080, 0.6268, 0.6874),
    ("RCRR", 0.5782, 0.6552, 0.5944),
    ("DSG", 0.6843, 0.6007, 0.6630),
    ("MILPS", 0.6954, 0.6549, 0.6856),
    ("SSD", 0.5188, 0.4066, 0.4878),
    ("SPS", 0.4539, 0.4154, 0.4444),
    ("ASD", 0.5582, 0.4049, 0.5133),
    ("R3Net", 0.8386, 0.6932, 0.7998),
    ("DSS", 0.8125, 0.7014, 0.7838),
    ("RADF", 0.8311, 0.6724, 0.7881),
    ("RFCN", 0.8239, 0.7376, 0.8023),
    ("PoolNet", 0.8799, 0.7363, 0.8420),
    ("LVNet", 0.8672, 0.7653, 0.8414),
    ("PDF-Net", 0.9144, 0.8027, 0.8860),
];

/// Rounding of P and R to four decimals moves F by at most this much.
pub const TOLERANCE: f64 = 5e-4;
