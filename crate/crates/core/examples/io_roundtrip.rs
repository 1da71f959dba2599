//! Writes a small cloud with a scalar field as XYZ, ASCII PLY and binary PLY,
//! reads each back and checks the values survive exactly.

use mls_uncertainty::io::{
    read_cloud, read_ply, write_cloud, write_ply, PlyFormat, Point3, PointCloud,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points: Vec<Point3> = (0..5)
        .map(|i| Point3::new(i as f64 * 0.1, 1.0 / (i + 3) as f64, -2.5 + i as f64))
        .collect();
    let intensity = vec![0.1, 0.2, 0.30000000000000004, 1e-300, 42.0];
    let cloud = PointCloud::new(points).with_scalar("intensity", intensity)?;

    let dir = tempfile::tempdir()?;
    let xyz = dir.path().join("cloud.xyz");
    let ascii = dir.path().join("ascii.ply");
    let binary = dir.path().join("binary.ply");
    write_cloud(&cloud, &xyz)?;
    write_ply(&cloud, &ascii, PlyFormat::Ascii)?;
    write_ply(&cloud, &binary, PlyFormat::Binary)?;

    for path in [&xyz, &ascii, &binary] {
        let back = if path == &xyz {
            read_cloud(path)?
        } else {
            read_ply(path)?
        };
        assert_eq!(back, cloud, "{}", path.display());
        println!(
            "{:<12} {} points, scalars {:?}",
            path.file_name().unwrap().to_string_lossy(),
            back.len(),
            back.scalar_names().collect::<Vec<_>>()
        );
    }
    println!("\nXYZ text:\n{}", std::fs::read_to_string(&xyz)?);
    Ok(())
}
