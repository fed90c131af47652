use std::ffi::{c_void, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use projective_dpt_ffi::*;

fn last_error() -> String {
    let p = pdpt_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { pdpt_string_free(p) };
    s
}

fn grid(n_t: usize, lo: f64, hi: f64, n: usize) -> *mut PdptGrid {
    let mut g = ptr::null_mut();
    let st = unsafe { pdpt_grid_new(0.0, 1.0, n_t, 1, &lo, &hi, &n, &mut g) };
    assert_eq!(st, PdptStatus::Ok);
    g
}

/// `[[1, x/(1+t)^2], [.., 1 + x^2/(1+t)^3]]` plus free streaming: divergence free.
extern "C" fn streaming(p: *const f64, n: usize, out: *mut f64, _user: *mut c_void) -> i32 {
    assert_eq!(n, 2);
    let (t, x) = unsafe { (*p, *p.add(1)) };
    let l = 1.0 + t;
    let v = [1.0 / l + 1.0, x / (l * l), x * x / (l * l * l) + 1.0];
    unsafe { ptr::copy_nonoverlapping(v.as_ptr(), out, 3) };
    0
}

extern "C" fn refuses(_: *const f64, _: usize, _: *mut f64, _: *mut c_void) -> i32 {
    7
}

#[test]
fn grid_and_field_round_trip() {
    let g = grid(4, -1.0, 1.0, 8);
    unsafe {
        assert_eq!(pdpt_grid_cells(g), 32);
        assert_eq!(pdpt_grid_dimension(g), 1);
        let mut c = [0.0; 2];
        assert_eq!(pdpt_grid_center(g, 0, c.as_mut_ptr(), 2), PdptStatus::Ok);
        assert_eq!(c, [0.125, -0.875]);
        assert_eq!(pdpt_grid_center(g, 32, c.as_mut_ptr(), 2), PdptStatus::InvalidArgument);

        let data: Vec<f64> = (0..96).map(|k| k as f64).collect();
        let mut f = ptr::null_mut();
        assert_eq!(pdpt_field_from_packed(g, data.as_ptr(), data.len(), &mut f), PdptStatus::Ok);
        assert_eq!((pdpt_field_cells(f), pdpt_field_components(f)), (32, 3));
        let mut back = vec![0.0; 96];
        assert_eq!(pdpt_field_copy_packed(f, back.as_mut_ptr(), 96), PdptStatus::Ok);
        assert_eq!(back, data);
        assert_eq!(pdpt_field_copy_packed(f, back.as_mut_ptr(), 95), PdptStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("f.pdpt").to_str().unwrap()).unwrap();
        assert_eq!(pdpt_field_save(f, path.as_ptr()), PdptStatus::Ok);
        let mut g2 = ptr::null_mut();
        assert_eq!(pdpt_field_load(path.as_ptr(), &mut g2), PdptStatus::Ok);
        let mut again = vec![0.0; 96];
        assert_eq!(pdpt_field_copy_packed(g2, again.as_mut_ptr(), 96), PdptStatus::Ok);
        assert_eq!(again, data);

        let mut short = ptr::null_mut();
        assert_eq!(pdpt_field_from_packed(g, data.as_ptr(), 95, &mut short), PdptStatus::InvalidArgument);
        assert!(short.is_null());
        let missing = CString::new("/no/such/dir/f.pdpt").unwrap();
        assert_eq!(pdpt_field_load(missing.as_ptr(), &mut short), PdptStatus::Io);

        pdpt_field_free(g2);
        pdpt_field_free(f);
        pdpt_grid_free(g);
    }
}

#[test]
fn push_forward_keeps_divergence_small() {
    unsafe {
        let mut prev = f64::INFINITY;
        for n in [32, 64] {
            let g = grid(n, -1.0, 1.0, n);
            let mut f = ptr::null_mut();
            assert_eq!(pdpt_field_sample(g, Some(streaming), ptr::null_mut(), &mut f), PdptStatus::Ok);
            let mut img = ptr::null_mut();
            assert_eq!(pdpt_field_push_forward(f, 0.7, &mut img), PdptStatus::Ok);
            let (mut div, mut lam) = (0.0, 0.0);
            assert_eq!(pdpt_field_divergence_norm(img, &mut div), PdptStatus::Ok);
            assert_eq!(pdpt_field_min_eigenvalue(img, &mut lam), PdptStatus::Ok);
            assert!(div < prev / 2.0 && lam > 0.0, "{div} {lam}");
            prev = div;
            let mut ig = ptr::null_mut();
            assert_eq!(pdpt_field_grid(img, &mut ig), PdptStatus::Ok);
            let mut c = [0.0; 2];
            assert_eq!(pdpt_grid_center(ig, pdpt_grid_cells(ig) - 1, c.as_mut_ptr(), 2), PdptStatus::Ok);
            assert!(c[0] < 1.0 / 1.7);
            pdpt_grid_free(ig);
            pdpt_field_free(img);
            pdpt_field_free(f);
            pdpt_grid_free(g);
        }
    }
}

#[test]
fn errors_map_to_statuses() {
    unsafe {
        let g = grid(4, -1.0, 1.0, 4);
        let mut f = ptr::null_mut();
        assert_eq!(pdpt_field_sample(g, Some(refuses), ptr::null_mut(), &mut f), PdptStatus::InvalidArgument);
        assert!(last_error().contains("returned 7"));
        assert_eq!(pdpt_field_sample(g, None, ptr::null_mut(), &mut f), PdptStatus::NullPointer);
        assert_eq!(pdpt_field_sample(g, Some(streaming), ptr::null_mut(), &mut f), PdptStatus::Ok);

        let mut img = ptr::null_mut();
        assert_eq!(pdpt_field_push_forward(f, -1.0, &mut img), PdptStatus::DegenerateMap);
        assert!(img.is_null());
        assert!(last_error().contains("degenerate"));
        assert_eq!(pdpt_field_push_forward(f, f64::INFINITY, &mut img), PdptStatus::InvalidArgument);
        assert_eq!(pdpt_field_push_forward(ptr::null(), 0.5, &mut img), PdptStatus::NullPointer);
        assert_eq!(pdpt_field_push_forward(f, 0.5, ptr::null_mut()), PdptStatus::NullPointer);

        let mut bad = ptr::null_mut();
        let (lo, hi, n) = (1.0, -1.0, 4usize);
        assert_eq!(pdpt_grid_new(0.0, 1.0, 4, 1, &lo, &hi, &n, &mut bad), PdptStatus::InvalidArgument);
        assert_eq!(pdpt_grid_new(0.0, 1.0, 4, 1, ptr::null(), &hi, &n, &mut bad), PdptStatus::NullPointer);
        assert_eq!(pdpt_grid_cells(ptr::null()), 0);
        pdpt_grid_free(ptr::null_mut());

        let (p, s) = ([1.0, 2.0], [1.0, 0.0, 1.0]);
        let (mut q, mut sb) = ([0.0; 2], [0.0; 3]);
        assert_eq!(
            pdpt_push_forward_value(1.0, p.as_ptr(), 2, s.as_ptr(), q.as_mut_ptr(), sb.as_mut_ptr()),
            PdptStatus::Ok
        );
        assert_eq!((q, sb), ([0.5, 1.0], [2.0, -4.0, 16.0]));
        assert_eq!(
            pdpt_push_forward_value(-1.0, p.as_ptr(), 2, s.as_ptr(), q.as_mut_ptr(), sb.as_mut_ptr()),
            PdptStatus::DegenerateMap
        );

        pdpt_field_free(f);
        pdpt_grid_free(g);
    }
}

#[test]
fn flows_solve_from_json() {
    let json = CString::new(
        r#"{"gas": {"d": 1, "gamma": 3.0, "model": {"kind": "isentropic", "a": 1.0}},
            "init": "cos-bump", "domain": [[-6, 6]], "cells": [120], "t_end": 0.5, "steps": 10, "scheme": "muscl"}"#,
    )
    .unwrap();
    unsafe {
        let mut flow = ptr::null_mut();
        assert_eq!(pdpt_flow_solve_json(json.as_ptr(), &mut flow), PdptStatus::Ok, "{}", last_error());
        let levels = pdpt_flow_levels(flow);
        assert!(levels >= 11);
        let (mut a, mut b) = (PdptFunctionals::default(), PdptFunctionals::default());
        assert_eq!(pdpt_flow_functionals(flow, 0, &mut a), PdptStatus::Ok);
        assert_eq!(pdpt_flow_functionals(flow, levels - 1, &mut b), PdptStatus::Ok);
        assert_eq!(a.time, 0.0);
        assert!((b.time - 0.5).abs() < 1e-12);
        assert!((a.mass - b.mass).abs() < 1e-12 * a.mass);
        assert!(b.inertia > a.inertia && b.energy <= a.energy * (1.0 + 1e-12));
        assert_eq!(pdpt_flow_functionals(flow, levels, &mut a), PdptStatus::InvalidArgument);

        let mut t = ptr::null_mut();
        assert_eq!(pdpt_flow_tensor(flow, &mut t), PdptStatus::Ok);
        assert_eq!(pdpt_field_cells(t), levels * 120);
        let mut lam = 0.0;
        assert_eq!(pdpt_field_min_eigenvalue(t, &mut lam), PdptStatus::Ok);
        assert!(lam >= -1e-12);
        pdpt_field_free(t);
        pdpt_flow_free(flow);

        let bad = CString::new(r#"{"gas": {"d": 3}}"#).unwrap();
        assert_eq!(pdpt_flow_solve_json(bad.as_ptr(), &mut flow), PdptStatus::InvalidArgument);
        let invalid = CString::new(json.to_str().unwrap().replace("[120]", "[0]")).unwrap();
        assert_eq!(pdpt_flow_solve_json(invalid.as_ptr(), &mut flow), PdptStatus::InvalidArgument);
        assert!(last_error().contains("cells"));
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// The static library built next to this test binary, if cargo produced one.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps.parent()?, deps].iter().map(|d| d.join("libprojective_dpt_ffi.a")).find(|p| p.exists())
}

fn cc(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new("cc").args(args).current_dir(dir).output().expect("a C compiler on PATH")
}

#[test]
fn header_compiles_and_links() {
    let dir = crate_dir();
    let include = format!("-I{}", dir.join("include").display());
    let src = dir.join("tests/c/smoke.c");
    let out = cc(&["-std=c99", "-Wall", "-Wextra", "-Werror", "-fsyntax-only", &include, src.to_str().unwrap()], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let Some(lib) = static_lib() else {
        eprintln!("static library not found next to the test binary; link step skipped");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let out = cc(
        &[
            "-std=c99",
            &include,
            src.to_str().unwrap(),
            lib.to_str().unwrap(),
            "-lpthread",
            "-ldl",
            "-lm",
            "-o",
            bin.to_str().unwrap(),
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}{}", String::from_utf8_lossy(&run.stdout), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
