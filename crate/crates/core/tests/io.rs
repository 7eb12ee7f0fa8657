mod common;

use common::fixed;
use faer::Mat;
use proptest::prelude::*;
use spilloverfree::io::{
    format_matrix, format_spectral, format_spectral_values, parse_matrix, parse_spectral,
    read_matrix, read_spectral, write_matrix, write_spectral, Report,
};
use spilloverfree::spectral::{EigBlock, RealSpectralData, SpectralBlocks};
use spilloverfree::Error;

fn any_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        prop::num::f64::NORMAL,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

fn matrix(max: usize) -> impl Strategy<Value = Mat<f64>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(any_f64(), r * c)
            .prop_map(move |v| Mat::from_fn(r, c, |i, j| v[i + r * j]))
    })
}

fn same_bits(a: &Mat<f64>, b: &Mat<f64>) -> bool {
    a.nrows() == b.nrows()
        && a.ncols() == b.ncols()
        && (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].to_bits() == b[(i, j)].to_bits()))
}

proptest! {
    #![proptest_config(fixed(64, 0x10))]

    #[test]
    fn general_matrices_round_trip_exactly(a in matrix(7)) {
        let b = parse_matrix(&format_matrix(&a, false)).unwrap();
        prop_assert!(same_bits(&a, &b));
    }

    #[test]
    fn symmetric_matrices_round_trip_exactly(a in matrix(7)) {
        let n = a.nrows();
        let s = Mat::from_fn(n, n, |i, j| if i >= j { a[(i, j % a.ncols())] } else { a[(j, i % a.ncols())] });
        let text = format_matrix(&s, true);
        prop_assert!(text.starts_with("%%MatrixMarket matrix array real symmetric"));
        prop_assert!(same_bits(&s, &parse_matrix(&text).unwrap()));
    }

    #[test]
    fn spectral_files_round_trip(
        n in 1usize..=6, pairs in prop::collection::vec((-5.0f64..5.0, 0.01f64..5.0), 0..3),
        reals in prop::collection::vec(0.01f64..5.0, 0..3), seed in any::<u64>(),
    ) {
        prop_assume!(!pairs.is_empty() || !reals.is_empty());
        let mut blocks: Vec<EigBlock> = pairs.iter().map(|&(alpha, beta)| EigBlock::Pair { alpha, beta }).collect();
        blocks.extend(reals.iter().enumerate().map(|(k, v)| EigBlock::Real(if k % 2 == 0 { *v } else { -*v })));
        let values = SpectralBlocks::new(blocks).unwrap();
        let p = values.p();
        let x = Mat::from_fn(n, p, |i, j| ((seed.wrapping_add((i * 31 + j) as u64) % 1000) as f64 - 500.0) / 7.0);
        let d = RealSpectralData::new(values.clone(), x).unwrap();
        let f = parse_spectral(&format_spectral(&d)).unwrap();
        prop_assert_eq!(&f.values, &values);
        prop_assert!(same_bits(&f.x.unwrap(), &d.x().to_owned()));
        let g = parse_spectral(&format_spectral_values(&values)).unwrap();
        prop_assert_eq!(&g.values, &values);
        prop_assert!(g.x.is_none());
    }

    #[test]
    fn reports_round_trip(
        entries in prop::collection::vec(("[a-z][a-z0-9_.]{0,12}", "[ -~&&[^=]]{0,20}"), 0..8),
        ts in proptest::option::of("unix:[0-9]{1,10}"),
    ) {
        let mut r = Report::new();
        r.timestamp = ts;
        for (k, v) in &entries {
            r.push(k, v.trim());
        }
        let back = Report::parse(&r.render()).unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn coordinate_format_is_accepted() {
    let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 2\n1 1 2.0\n3 1 -1.5\n";
    let a = parse_matrix(text).unwrap();
    assert_eq!(a[(0, 0)], 2.0);
    assert_eq!(a[(0, 2)], -1.5);
    assert_eq!(a[(2, 0)], -1.5);
    assert_eq!(a[(1, 1)], 0.0);
}

#[test]
fn parse_errors_carry_positions() {
    let err = parse_matrix("%%MatrixMarket matrix array real general\n2 1\n1.0\nabc\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 4, column: 1, .. }), "{err}");
    let err = parse_matrix("%%MatrixMarket matrix array real general\n2 2\n1.0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
    let err = parse_spectral("2 1\npair 1.0  x\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, column: 11, .. }), "{err}");
    let err = parse_spectral("0 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
    let err = parse_spectral("2 2\npair 1 1\n").unwrap_err();
    assert!(matches!(err, Error::MalformedBlocks(_)), "{err}");
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let a = Mat::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
    write_matrix(&a, false, dir.path().join("a.mtx")).unwrap();
    assert!(same_bits(&a, &read_matrix(dir.path().join("a.mtx")).unwrap()));
    let values = SpectralBlocks::new(vec![EigBlock::Pair { alpha: -0.1, beta: 0.3 }, EigBlock::Real(2.0)]).unwrap();
    let d = RealSpectralData::new(values, Mat::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 4.5)).unwrap();
    write_spectral(&d, dir.path().join("d.spec")).unwrap();
    let back = read_spectral(dir.path().join("d.spec")).unwrap();
    assert_eq!(back.values(), d.values());
    assert!(same_bits(&back.x().to_owned(), &d.x().to_owned()));
    assert!(matches!(read_matrix(dir.path().join("missing.mtx")), Err(Error::Io(_))));
}
