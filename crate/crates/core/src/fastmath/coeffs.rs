// Minimax fits produced by tools/fit_coeffs.py (mpmath, 60 digits).

/// ln(x) = z * R(z^2), z = (x-1)/(x+1), x in [sqrt(1/2), sqrt(2)]. Max rel err 2.7e-14.
pub(crate) const LN_ATANH: [f64; 6] = [
    1.9999999999999467,
    0.6666666667965147,
    0.39999994872180056,
    0.28572168017030375,
    0.22174177210723556,
    0.1960908407262258,
];

/// 2/ln 2 as a double-double.
pub(crate) const LOG2_LEAD: (f64, f64) = (2.8853900817779268, 4.0710547481862066e-17);

/// log2(x) = z * (LOG2_LEAD + w * Q(w)), x in [1, 2].
pub(crate) const LOG2_TAIL: [f64; 10] = [
    0.9617966939259704,
    0.5770780163578232,
    0.41219858277482935,
    0.32059892295464515,
    0.26230712594187716,
    0.22198097072322065,
    0.19189461725516072,
    0.17463744988980642,
    0.12039244506063342,
    0.24539900127705794,
];

/// 2^x = 1 + x * Q(x), x in [0, 1].
pub(crate) const EXP2_TAIL: [f64; 11] = [
    0.693147180559946,
    0.2402265069590633,
    0.055504108665602236,
    0.009618129099550895,
    0.0013333558629562673,
    0.0001540351230973406,
    1.5253175053792941e-05,
    1.3208367308250162e-06,
    1.025321230380943e-07,
    6.559529836615885e-09,
    6.263465271285419e-10,
];

/// sin(pi t) = t * (2 + (w - 1/4) * T(w)), w = t^2 <= 1/4.
pub(crate) const SIN_PI_TAIL: [f64; 5] = [
    -4.566370614065824,
    2.4053685860993967,
    -0.5791784023998486,
    0.08028909218969012,
    -0.007016589949713139,
];
