#![allow(dead_code)]

use lorenz_core::curves::LorenzModel;
use proptest::prelude::*;

pub fn special() -> impl Strategy<Value = LorenzModel> {
    (0.0..=1.0f64, 0.05..=1.0f64).prop_map(|(a, beta)| LorenzModel::KakwaniSpecial { a, beta })
}

pub fn ortega() -> impl Strategy<Value = LorenzModel> {
    (0.0..5.0f64, 0.05..=1.0f64).prop_map(|(a, b)| LorenzModel::Ortega { a, b })
}

pub fn sarabia() -> impl Strategy<Value = LorenzModel> {
    (0.0..5.0f64, 0.05..=1.0f64, 1.0..5.0f64).prop_map(|(a, b, d)| LorenzModel::SarabiaL2 { a, b, d })
}

/// L3 draws; a quarter of them sit on the s = 1 boundary.
pub fn l3() -> impl Strategy<Value = LorenzModel> {
    (
        0.0..5.0f64,
        0.05..=1.0f64,
        1.0..5.0f64,
        prop_oneof![3 => 0.05..=1.0f64, 1 => Just(1.0)],
    )
        .prop_map(|(a, b, d, s)| LorenzModel::L3 { a, b, d, s })
}

/// Genuine general quadratics with `m < 0`: pick b, then a > b²/4.
pub fn gq() -> impl Strategy<Value = LorenzModel> {
    (-1.8..-0.2f64, 0.0..1.0f64, 0.0..0.5f64).prop_map(|(b, t, c)| {
        let a = (b * b / 4.0 + 0.01 + t).max(1.0 - c);
        LorenzModel::Gq { a, b, c }
    })
}

pub fn closed_gini_family() -> impl Strategy<Value = LorenzModel> {
    prop_oneof![special(), ortega(), sarabia(), l3()]
}

pub fn valid_model() -> impl Strategy<Value = LorenzModel> {
    prop_oneof![
        special(),
        special().prop_map(|m| match m {
            LorenzModel::KakwaniSpecial { a, beta } => LorenzModel::KakwaniBeta { a, alpha: 1.0, beta },
            other => other,
        }),
        ortega(),
        sarabia(),
        l3(),
        gq(),
    ]
}
