use morai_core::level::{Author, Edit, LevelError};
use morai_core::{Level, TileId, TileManifest};

fn t(id: u8) -> TileId {
    TileId::new(id).unwrap()
}

#[test]
fn edit_examples() {
    let mut level = Level::new(40).unwrap();
    level.apply_edit(&Edit::add(3, 14, t(0), Author::Human)).unwrap();
    assert_eq!(level.get(3, 14), Some(t(0)));
    assert_eq!(level.apply_edit(&Edit::add(3, 14, t(5), Author::Human)), Err(LevelError::CellOccupied { x: 3, y: 14 }));
    level.apply_edit(&Edit::delete(3, 14, t(0), Author::Human)).unwrap();
    assert_eq!(level.get(3, 14), None);
    assert!(matches!(level.apply_edit(&Edit::add(40, 0, t(1), Author::Human)), Err(LevelError::OutOfBounds { .. })));
    assert!(matches!(level.apply_edit(&Edit::delete(0, 0, t(1), Author::Human)), Err(LevelError::CellMismatch { .. })));
    assert!(matches!(level.apply_edit(&Edit::delete(0, 0, t(1), Author::Ai)), Err(LevelError::AiDeletion)));
}

#[test]
fn window_examples() {
    assert_eq!(Level::new(40).unwrap().extract_window(7).unwrap().origin_x, 0);
    let wide = Level::new(200).unwrap();
    assert_eq!(wide.extract_window(100).unwrap().origin_x, 80);
    assert_eq!(wide.extract_window(5).unwrap().origin_x, 0);
    assert_eq!(wide.extract_window(199).unwrap().origin_x, 160);
    assert!(matches!(Level::new(39).unwrap().extract_window(0), Err(LevelError::LevelTooNarrow { width: 39 })));
}

#[test]
fn tensor_examples() {
    let mut level = Level::new(40).unwrap();
    assert!(level.extract_window(0).unwrap().to_tensor::<f64>().data().iter().all(|&v| v == 0.0));
    level.set(2, 13, Some(t(4))).unwrap();
    let v = level.extract_window(0).unwrap().to_tensor::<f64>();
    assert_eq!(v.data().iter().filter(|&&x| x != 0.0).count(), 1);
    assert_eq!(v.get(2, 13, 4), 1.0);

    let mut ground = Level::new(40).unwrap();
    for x in 0..40 {
        ground.set(x, 14, Some(t(0))).unwrap();
    }
    let v = ground.extract_window(0).unwrap().to_tensor::<f32>();
    assert_eq!(v.data().iter().sum::<f32>(), 40.0);
    assert!((0..40).all(|x| v.get(x, 14, 0) == 1.0));
}

#[test]
fn text_format() {
    let manifest = TileManifest::builtin();
    let empty = "-".repeat(40) + "\n";
    let level = Level::parse(&empty.repeat(15), &manifest).unwrap();
    assert_eq!((level.width(), level.occupied_count()), (40, 0));

    let mut text = empty.repeat(14);
    text.push_str(&("X".repeat(20) + "<>[]oEKPH" + &"-".repeat(11) + "\n"));
    let level = Level::parse(&text, &manifest).unwrap();
    assert_eq!(level.to_text(&manifest), text);

    let bad = empty.repeat(3) + &"-".repeat(5) + "?" + &"-".repeat(34) + "\n" + &empty.repeat(11);
    assert_eq!(Level::parse(&bad, &manifest), Err(LevelError::UnknownGlyph { glyph: '?', row: 3, col: 5 }));
    assert!(matches!(Level::parse(&empty.repeat(14), &manifest), Err(LevelError::BadDimensions { .. })));
}

#[test]
fn toy_corpus_parses() {
    let manifest = TileManifest::builtin();
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/toy");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let level = Level::parse(&text, &manifest).unwrap();
        assert!(level.width() >= 40);
        assert_eq!(level.to_text(&manifest), text);
        n += 1;
    }
    assert_eq!(n, 5);
}
