mod common;

use common::*;
use fxbench::tickdata::{load_series_file, remove_flat_areas, PriceField, PriceSeries, TickError};
use proptest::prelude::*;

#[test]
fn thousand_random_series() {
    for seed in 0..1000 {
        check_preprocessing(&random_preprocessing_series(seed)).unwrap();
    }
}

#[test]
fn constant_series_keeps_one_point() {
    let s = random_preprocessing_series(10);
    let out = remove_flat_areas(&s).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.points[0], s.points[0]);
}

#[test]
fn clean_series_is_unchanged() {
    let s = random_preprocessing_series(11);
    assert_eq!(remove_flat_areas(&s).unwrap(), s);
}

#[test]
fn empty_series_is_a_data_error() {
    assert!(matches!(remove_flat_areas(&PriceSeries::default()), Err(TickError::EmptySeries)));
}

#[test]
fn truefx_fixture_loads_and_flattens() {
    let path = manifest_dir().join("tests/data/truefx_sample.csv");
    let raw = load_series_file(&path, "EUR/USD", PriceField::Mid).unwrap();
    assert_eq!(raw.source_label, "truefx_sample");
    assert_eq!(raw.len(), 10);
    assert!((raw.mid(0) - 1.15805).abs() < 1e-12);
    assert_eq!(raw.timestamp_ms(0), 1_633_046_400_123);
    let clean = remove_flat_areas(&raw).unwrap();
    assert_eq!(clean.mids().len(), 6);
    check_preprocessing(&raw).unwrap();
    let bids = load_series_file(&path, "EUR/USD", PriceField::Bid).unwrap();
    assert!((bids.mid(0) - 1.158).abs() < 1e-12);
    let other = load_series_file(&path, "USD/JPY", PriceField::Mid).unwrap();
    assert_eq!(other.len(), 2);
}

proptest! {
    #[test]
    fn idempotent_and_flat_free(codes in prop::collection::vec(0u8..4, 1..300)) {
        let mids: Vec<f64> = codes.iter().map(|&c| 1.0 + f64::from(c) * 1e-4).collect();
        let s = PriceSeries::from_mids(&mids, "p");
        check_preprocessing(&s).map_err(TestCaseError::fail)?;
    }
}
