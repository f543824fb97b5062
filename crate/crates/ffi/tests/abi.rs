use std::ffi::{CStr, CString};
use std::ptr;

use kronsketch::linalg::{kron_chain, DenseMatrix};
use kronsketch::sketch::{BaseFamily, TensorFamily};
use kronsketch::tree::{TensorTree, TreeConfig};
use kronsketch_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ks_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn factors() -> Vec<DenseMatrix> {
    vec![
        DenseMatrix::from_rows(&[&[1.0, 0.5], &[0.0, 2.0], &[1.0, -1.0], &[3.0, 0.25]]),
        DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 1.0], &[-0.5, 4.0]]),
    ]
}

fn new_tree(m: usize, adaptive: bool) -> *mut KsTree {
    let fs = factors();
    let data: Vec<*const f64> = fs.iter().map(|a| a.as_slice().as_ptr()).collect();
    let rows: Vec<usize> = fs.iter().map(|a| a.rows()).collect();
    let cols: Vec<usize> = fs.iter().map(|a| a.cols()).collect();
    let mut tree = ptr::null_mut();
    let status = unsafe {
        ks_tree_new(
            fs.len(),
            data.as_ptr(),
            rows.as_ptr(),
            cols.as_ptr(),
            KsBaseFamily::CountSketch,
            KsTensorFamily::TensorSketch,
            m,
            7,
            adaptive,
            &mut tree,
        )
    };
    assert_eq!(status, KsStatus::Ok, "{}", last_error());
    tree
}

fn root(tree: *const KsTree) -> DenseMatrix {
    let (mut r, mut c) = (0, 0);
    unsafe {
        assert_eq!(ks_tree_root_shape(tree, &mut r, &mut c), KsStatus::Ok);
        let mut buf = vec![0.0; r * c];
        assert_eq!(ks_tree_root_copy(tree, buf.as_mut_ptr(), buf.len()), KsStatus::Ok);
        DenseMatrix::new(r, c, buf).unwrap()
    }
}

#[test]
fn root_matches_rust_tree() {
    let tree = new_tree(16, false);
    let config = TreeConfig::new(BaseFamily::CountSketch, TensorFamily::TensorSketch, 16).with_seed(7);
    let expected = TensorTree::initialize(factors(), config).unwrap();
    assert_eq!(root(tree), *expected.root());
    unsafe { ks_tree_free(tree) };
}

#[test]
fn update_and_recompute_count() {
    let tree = new_tree(16, false);
    let delta = [0.5, 0.0, 0.0, 0.0, 0.0, -1.0];
    unsafe {
        assert_eq!(ks_tree_update(tree, 1, delta.as_ptr(), 3, 2), KsStatus::Ok);
        let mut count = 0;
        assert_eq!(ks_tree_last_recompute_count(tree, &mut count), KsStatus::Ok);
        assert_eq!(count, 2);
    }
    let mut fs = factors();
    fs[1]
        .add_assign(&DenseMatrix::new(3, 2, delta.to_vec()).unwrap())
        .unwrap();
    let config = TreeConfig::new(BaseFamily::CountSketch, TensorFamily::TensorSketch, 16).with_seed(7);
    let fresh = TensorTree::initialize(fs, config).unwrap();
    let diff = root(tree).sub(fresh.root()).unwrap().max_abs();
    assert!(diff < 1e-12, "{diff}");
    unsafe { ks_tree_free(tree) };
}

#[test]
fn regression_query_recovers_consistent_solution() {
    let tree = new_tree(64, false);
    let a = kron_chain(&factors()).unwrap();
    let x_true = [1.0, -2.0, 0.5, 3.0];
    let b = a.matvec(&x_true).unwrap();
    let (idx, vals): (Vec<usize>, Vec<f64>) = b.as_slice().iter().copied().enumerate().unzip();
    let mut sb = vec![0.0; 64];
    let mut x = [0.0; 4];
    unsafe {
        let status = ks_tree_sketch_vector(tree, 12, idx.as_ptr(), vals.as_ptr(), 12, sb.as_mut_ptr(), 64);
        assert_eq!(status, KsStatus::Ok, "{}", last_error());
        assert_eq!(
            ks_regression_query(tree, sb.as_ptr(), 64, x.as_mut_ptr(), 4),
            KsStatus::Ok
        );
    }
    for (got, want) in x.iter().zip(x_true) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
    unsafe { ks_tree_free(tree) };
}

#[test]
fn lowrank_query_returns_orthonormal_rows() {
    let tree = new_tree(32, false);
    let mut uk = [0.0; 8];
    unsafe { assert_eq!(ks_lowrank_query(tree, 2, uk.as_mut_ptr(), 8), KsStatus::Ok) };
    let u = DenseMatrix::new(2, 4, uk.to_vec()).unwrap();
    let gram = u.matmul(&u.transpose()).unwrap();
    assert!(gram.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-10);
    unsafe {
        assert_eq!(ks_lowrank_query(tree, 9, uk.as_mut_ptr(), 8), KsStatus::InvalidArgument);
        ks_tree_free(tree);
    }
}

#[test]
fn error_statuses_and_messages() {
    let tree = new_tree(16, false);
    let delta = [1.0; 4];
    unsafe {
        assert_eq!(
            ks_tree_update(tree, 0, delta.as_ptr(), 2, 2),
            KsStatus::DimensionMismatch
        );
        assert!(last_error().contains("mismatch"), "{}", last_error());
        assert_eq!(
            ks_tree_update(tree, 5, delta.as_ptr(), 2, 2),
            KsStatus::DimensionMismatch
        );
        assert_eq!(
            ks_tree_update_adaptive(tree, 0, delta.as_ptr(), 4, 2),
            KsStatus::InvalidArgument
        );
        assert_eq!(
            ks_tree_update(ptr::null_mut(), 0, delta.as_ptr(), 4, 2),
            KsStatus::NullPointer
        );
        let mut small = [0.0; 3];
        assert_eq!(ks_tree_root_copy(tree, small.as_mut_ptr(), 3), KsStatus::BufferTooSmall);
        ks_tree_free(tree);
        ks_tree_free(ptr::null_mut());
    }
}

#[test]
fn adaptive_update_changes_sketch() {
    let tree = new_tree(16, true);
    let before = root(tree);
    let zero = [0.0; 8];
    unsafe { assert_eq!(ks_tree_update_adaptive(tree, 0, zero.as_ptr(), 4, 2), KsStatus::Ok) };
    assert_ne!(root(tree), before);
    unsafe { ks_tree_free(tree) };
}

#[test]
fn choose_m_matches_library() {
    let mut m = 0;
    let status = unsafe {
        ks_choose_m(
            KsBaseFamily::CountSketch,
            KsTensorFamily::TensorSketch,
            4.0,
            2,
            0.5,
            0.1,
            1.0,
            &mut m,
        )
    };
    assert_eq!(status, KsStatus::Ok);
    let want = kronsketch::sketch::choose_m(
        BaseFamily::CountSketch,
        TensorFamily::TensorSketch,
        4.0,
        2,
        0.5,
        0.1,
        1.0,
    );
    assert_eq!(m, want.unwrap());
    let status = unsafe {
        ks_choose_m(
            KsBaseFamily::CountSketch,
            KsTensorFamily::TensorSrht,
            4.0,
            2,
            0.5,
            0.1,
            1.0,
            &mut m,
        )
    };
    assert_eq!(status, KsStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.snap").to_str().unwrap()).unwrap();
    let tree = new_tree(16, false);
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(ks_tree_write_snapshot(tree, path.as_ptr()), KsStatus::Ok);
        assert_eq!(ks_tree_read_snapshot(path.as_ptr(), &mut back), KsStatus::Ok);
    }
    assert_eq!(root(back), root(tree));
    let missing = CString::new(dir.path().join("none").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    unsafe {
        assert_eq!(ks_tree_read_snapshot(missing.as_ptr(), &mut none), KsStatus::Io);
        assert!(none.is_null());
        ks_tree_free(tree);
        ks_tree_free(back);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/kronsketch.h");
    for name in [
        "ks_last_error_message",
        "ks_tree_new",
        "ks_tree_free",
        "ks_tree_update",
        "ks_tree_update_adaptive",
        "ks_tree_last_recompute_count",
        "ks_tree_root_shape",
        "ks_tree_root_copy",
        "ks_tree_sketch_vector",
        "ks_regression_query",
        "ks_lowrank_query",
        "ks_choose_m",
        "ks_tree_write_snapshot",
        "ks_tree_read_snapshot",
        "typedef struct KsTree KsTree",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
