use mls_uncertainty::matrix::*;

#[test]
fn shape_checked() {
    assert!(DesignMatrix::anonymous(2, 2, vec![0.0; 3]).is_err());
    let m = DesignMatrix::from_rows(
        vec!["a".into(), "b".into()],
        &[vec![1.0, 2.0], vec![3.0, 4.0]],
    )
    .unwrap();
    assert_eq!(m.row(1), &[3.0, 4.0]);
    assert_eq!(m.column(0), vec![1.0, 3.0]);
    let m2 = m.with_column("c", &[5.0, 6.0]).unwrap();
    assert_eq!(m2.row(0), &[1.0, 2.0, 5.0]);
    assert!(m.with_column("a", &[0.0, 0.0]).is_err());
    assert_eq!(m.select_rows(&[1, 1]).row(1), &[3.0, 4.0]);
}
