mod common;

use std::collections::BTreeSet;

use gaf_learn::dataset::{
    parse_csv, split_stratified, Binarizer, Column, ColumnKind, ColumnSpec, Predicate, RawDataset, Schema,
};
use gaf_learn::Error;
use proptest::prelude::*;

fn spec(name: &str, kind: ColumnKind) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind,
        bins: None,
        thresholds: None,
    }
}

fn raw_strategy() -> impl Strategy<Value = RawDataset> {
    (12usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(-5i32..5).prop_map(f64::from), -10.0f64..10.0], n),
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(0usize..2, n),
        )
            .prop_map(|(num, cat, bin, labels)| RawDataset {
                specs: vec![
                    spec("x", ColumnKind::Numeric),
                    spec("colour", ColumnKind::Categorical),
                    spec("flag", ColumnKind::Binary),
                ],
                columns: vec![
                    Column::Numeric(num),
                    Column::Categorical(cat.into_iter().map(String::from).collect()),
                    Column::Binary(bin),
                ],
                labels,
                label_names: vec!["no".into(), "yes".into()],
                dropped_rows: 0,
            })
    })
}

fn source_column(p: &Predicate) -> usize {
    match p {
        Predicate::Interval { column, .. }
        | Predicate::Equals { column, .. }
        | Predicate::IsTrue { column }
        | Predicate::Always { column } => *column,
    }
}

proptest! {
    #[test]
    fn binarization_is_invertible_and_exclusive(
        raw in raw_strategy(),
        bins in 2usize..5,
        train_only in any::<bool>(),
    ) {
        let rows: Vec<usize> = (0..raw.n_instances()).step_by(2).collect();
        let fit_rows = if train_only { Some(rows.as_slice()) } else { None };
        let binarizer = Binarizer::fit(&raw, fit_rows, bins).unwrap();
        let data = binarizer.transform(&raw);
        prop_assert_eq!(data.n_features(), binarizer.indicators.len());
        for (row, values) in data.instances.iter().enumerate() {
            for (ind, &v) in binarizer.indicators.iter().zip(values) {
                prop_assert!(v == 0.0 || v == 1.0);
                prop_assert_eq!(ind.predicate.holds(&raw, row), v == 1.0);
            }
            // numeric bins and category levels: exactly one indicator per source column
            for column in 0..2 {
                let on = binarizer
                    .indicators
                    .iter()
                    .zip(values)
                    .filter(|(ind, &v)| source_column(&ind.predicate) == column && v == 1.0)
                    .count();
                prop_assert_eq!(on, 1);
            }
        }
    }

    #[test]
    fn stratified_split_partitions_and_preserves_proportions(
        counts in prop::collection::vec(30usize..150, 2..5),
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat(c).take(k)).collect();
        let n = labels.len();
        let s = split_stratified(n, &labels, seed).unwrap();
        let all: BTreeSet<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(s.train.len() + s.validation.len() + s.test.len(), n);
        let k = counts.len() as f64;
        prop_assert!((s.train.len() as f64 - 0.7 * n as f64).abs() <= k);
        prop_assert!((s.validation.len() as f64 - 0.1 * n as f64).abs() <= k);
        for part in [&s.train, &s.validation, &s.test] {
            for (c, &count) in counts.iter().enumerate() {
                let share = part.iter().filter(|&&i| labels[i] == c).count() as f64 / part.len() as f64;
                prop_assert!((share - count as f64 / n as f64).abs() <= 0.05);
            }
        }
        prop_assert_eq!(split_stratified(n, &labels, seed).unwrap(), s);
    }
}

#[test]
fn iris_loads_with_expected_shape() {
    let schema = Schema::from_file(common::data_dir().join("iris.schema.json")).unwrap();
    let raw = gaf_learn::dataset::load_csv(common::data_dir().join("iris.data"), &schema).unwrap();
    assert_eq!(raw.n_instances(), 150);
    assert_eq!(raw.n_features(), 4);
    assert_eq!(raw.label_names.len(), 3);
    let data = common::iris();
    assert_eq!(data.n_features(), 12);
    let s = split_stratified(150, &data.labels, 9).unwrap();
    assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (105, 15, 30));
}

#[test]
fn empty_file_is_a_parse_error() {
    let schema: Schema = serde_json::from_str(
        r#"{"columns": [{"name": "x", "kind": "numeric"}, {"name": "y", "kind": "categorical"}], "label": "y"}"#,
    )
    .unwrap();
    assert!(matches!(parse_csv(&b""[..], "empty.csv", &schema), Err(Error::Parse { .. })));
    let err = parse_csv(&b"1.0,a\n2.0\n"[..], "short.csv", &schema).unwrap_err();
    assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
}
