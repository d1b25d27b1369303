use fisurf::io::{load_cell_fields, load_grid, write_output};

fn grid_err(text: &str) -> String {
    load_grid(text.as_bytes()).unwrap_err().to_string()
}

#[test]
fn reads_the_layout_with_y_rows() {
    let g = load_grid(",0,0.5,1\n0,1,2,3\n1,4,5,6\n".as_bytes()).unwrap();
    assert_eq!((g.n(), g.m()), (2, 1));
    assert_eq!(g.xs().values(), &[0.0, 0.5, 1.0]);
    assert_eq!(g.ys().values(), &[0.0, 1.0]);
    // body row j, column i holds z_ij
    assert_eq!(g.z(2, 0), 3.0);
    assert_eq!(g.z(0, 1), 4.0);
}

#[test]
fn tolerates_spaces_blank_lines_and_crlf() {
    let g = load_grid(" , 0 , 1 \r\n\r\n0, 1, 2\r\n1 ,3,4\r\n".as_bytes()).unwrap();
    assert_eq!(g.z(1, 1), 4.0);
}

#[test]
fn reports_locations() {
    assert_eq!(grid_err(",0,1,0.5\n0,1,2,3\n1,1,2,3\n"), "row 1: x knots not strictly increasing at index 2");
    assert_eq!(grid_err(",0,1\n0,1,2\n0,1,2\n"), "column 1: y knots not strictly increasing at index 1");
    assert_eq!(grid_err(",0,1\n0,1,abc\n1,1,2\n"), "row 2, column 3: not a number: \"abc\"");
    assert_eq!(grid_err(",0,1\n0,1,2\n1,1\n"), "row 3: expected 3 columns, found 2");
    assert_eq!(grid_err(",0,1\n0,1,inf\n1,1,2\n"), "row 2, column 3: non-finite value \"inf\"");
    assert_eq!(grid_err("x,0,1\n0,1,2\n1,1,2\n"), "row 1, column 1: header corner must be empty, found \"x\"");
    assert_eq!(grid_err(""), "empty file");
    assert!(grid_err(",0,1\n0,1,2\n").contains("at least 2"));
}

#[test]
fn per_cell_fields_in_grid_layout() {
    let text = ",c1,c2\nr1,0.4,\"0.4+0.2*x*y\"\nr2,0.3,0.6\n";
    let cells = load_cell_fields(text.as_bytes(), 2, 2).unwrap();
    assert_eq!(cells.get(2, 1).eval(1.0, 0.5).unwrap(), 0.5);
    assert_eq!(cells.get(1, 2).eval(0.0, 0.0).unwrap(), 0.3);
    // knot labels in the header are accepted as well
    assert!(load_cell_fields(",0,0.5,1\n0,0.4,0.4\n0.5,0.4,0.4\n".as_bytes(), 2, 2).is_ok());

    let err = load_cell_fields(",a,b\nr,0.4,0.4*\nr,1,1\n".as_bytes(), 2, 2).unwrap_err().to_string();
    assert!(err.starts_with("row 2, column 3:"), "{err}");
    let err = load_cell_fields(",a,b\nr,0.4,0.4\n".as_bytes(), 2, 2).unwrap_err().to_string();
    assert_eq!(err, "expected 2 body rows, found 1");
}

#[test]
fn atomic_write_replaces_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.txt");
    std::fs::write(&path, "old").unwrap();
    write_output(Some(&path), b"new contents").unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "new contents");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert!(write_output(Some(&dir.path().join("missing/out.txt")), b"x").is_err());
}
