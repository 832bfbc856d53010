use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use wkpi_core::graph::{load_tu_dataset, Dataset};
use wkpi_core::persistence::{write_diagram_csv, PersistenceDiagram};
use wkpi_core::pimage::{write_images_binary, write_images_csv, GridSpec, PersistenceImage};
use wkpi_core::pipeline::{compute_diagrams, fit_metric, ImageFeaturizer, WkpiCv};
use wkpi_core::rng::{substream, substream_seed};
use wkpi_core::svm::{accuracy, nested_cv, one_vs_rest};
use wkpi_core::synthetic::cycles_vs_trees;
use wkpi_core::wkpi::{
    gram_matrix, read_weight_file, sample_weight_on_grid, write_heatmap_csv, write_heatmap_pgm, write_weight_file,
    GaussianMixtureWeight, TrainResult, WkpiParams,
};

use crate::output::{write_atomic, write_text};
use crate::settings::Settings;

const SYNTHETIC_PREFIX: &str = "synthetic:cycles-vs-trees";

pub fn load_dataset(s: &Settings) -> Result<Dataset> {
    let spec = s
        .dataset
        .as_deref()
        .ok_or_else(|| anyhow!("no dataset given (use --dataset or `dataset = ...`)"))?;
    if let Some(rest) = spec.strip_prefix(SYNTHETIC_PREFIX) {
        let per_class = match rest.strip_prefix(':') {
            Some(n) => n.parse().with_context(|| format!("bad synthetic size in {spec:?}"))?,
            None if rest.is_empty() => 100,
            None => bail!("unknown synthetic dataset {spec:?}"),
        };
        return Ok(cycles_vs_trees(per_class, 8, 20, s.seed)?);
    }
    let dir = Path::new(spec);
    let name = match &s.name {
        Some(n) => n.clone(),
        None => dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| anyhow!("cannot infer a dataset name from {spec:?}; set `name`"))?,
    };
    let (ds, stats) = load_tu_dataset(dir, &name).with_context(|| format!("loading dataset {name} from {spec}"))?;
    info!("loaded {} graphs in {} classes from {}: {:?}", ds.len(), ds.class_count(), spec, stats);
    Ok(ds)
}

fn diagrams(s: &Settings, ds: &Dataset) -> Result<Vec<PersistenceDiagram>> {
    let d = compute_diagrams(&ds.graphs, s.pipeline.descriptor, &s.pipeline.diagrams)?;
    info!("computed {} diagrams", d.len());
    Ok(d)
}

fn featurize(s: &Settings, diagrams: &[PersistenceDiagram]) -> Result<(ImageFeaturizer, Vec<PersistenceImage>)> {
    let refs: Vec<&PersistenceDiagram> = diagrams.iter().collect();
    let feat = ImageFeaturizer::fit(&refs, &s.pipeline.diagrams.dimensions, &s.pipeline.images)?;
    let images = feat.transform_all(&refs);
    Ok((feat, images))
}

fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path, |w| {
        for i in 0..m.nrows() {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

fn write_weight(path: &Path, weight: &GaussianMixtureWeight) -> Result<()> {
    write_atomic(path, |w| Ok(write_weight_file(w, weight)?))
}

fn read_weight(path: &Path) -> Result<GaussianMixtureWeight> {
    let f = std::fs::File::open(path).with_context(|| format!("opening weight file {}", path.display()))?;
    read_weight_file(BufReader::new(f)).with_context(|| format!("parsing weight file {}", path.display()))
}

/// Writes `STEM.csv`, `STEM.pgm` and `STEM_scale.txt` under `out`.
fn export_heatmap(out: &Path, stem: &str, weight: &GaussianMixtureWeight, grid: &GridSpec) -> Result<Vec<PathBuf>> {
    let rows = sample_weight_on_grid(weight, grid);
    let csv = out.join(format!("{stem}.csv"));
    let pgm = out.join(format!("{stem}.pgm"));
    let scale = out.join(format!("{stem}_scale.txt"));
    write_atomic(&csv, |w| Ok(write_heatmap_csv(w, &rows)?))?;
    let mut range = (0.0, 0.0);
    write_atomic(&pgm, |w| {
        range = write_heatmap_pgm(w, &rows)?;
        Ok(())
    })?;
    write_text(
        &scale,
        &format!(
            "min {:?}\nmax {:?}\nx_min {:?}\nx_max {:?}\ny_min {:?}\ny_max {:?}\n",
            range.0, range.1, grid.x_min, grid.x_max, grid.y_min, grid.y_max
        ),
    )?;
    Ok(vec![csv, pgm, scale])
}

fn export_heatmaps(out: &Path, weight: &GaussianMixtureWeight, feat: &ImageFeaturizer) -> Result<()> {
    for (dim, grid) in feat.dimensions.iter().zip(&feat.grids) {
        export_heatmap(out, &format!("heatmap_dim{dim}"), weight, grid)?;
    }
    Ok(())
}

pub fn diagram(s: &Settings) -> Result<()> {
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let dir = s.out.join("diagrams");
    let mut index = Vec::with_capacity(diagrams.len());
    for (i, d) in diagrams.iter().enumerate() {
        let file = format!("graph_{i:06}.csv");
        write_atomic(&dir.join(&file), |w| Ok(write_diagram_csv(w, d)?))?;
        index.push(format!(
            "{i},{},diagrams/{file},{},{}",
            ds.class_values[ds.labels[i]],
            d.points.iter().filter(|p| p.dimension == 0).count(),
            d.points.iter().filter(|p| p.dimension == 1).count()
        ));
    }
    write_atomic(&s.out.join("index.csv"), |w| {
        writeln!(w, "graph,label,file,dim0_points,dim1_points")?;
        for line in &index {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    println!("wrote {} diagrams to {}", diagrams.len(), dir.display());
    Ok(())
}

pub fn image(s: &Settings) -> Result<()> {
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let (feat, images) = featurize(s, &diagrams)?;
    let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
    write_atomic(&s.out.join("images.csv"), |w| Ok(write_images_csv(w, &rows)?))?;
    let mut offset = 0;
    for (dim, grid) in feat.dimensions.iter().zip(&feat.grids) {
        let block: Vec<&[f64]> = rows.iter().map(|r| &r[offset..offset + grid.len()]).collect();
        write_atomic(&s.out.join(format!("images_dim{dim}.bin")), |w| Ok(write_images_binary(w, grid, &block)?))?;
        offset += grid.len();
    }
    write_labels(&s.out.join("labels.csv"), &ds)?;
    println!("wrote {} images with {} pixels to {}", images.len(), offset, s.out.display());
    Ok(())
}

fn write_labels(path: &Path, ds: &Dataset) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "graph,label")?;
        for (i, &l) in ds.labels.iter().enumerate() {
            writeln!(w, "{i},{}", ds.class_values[l])?;
        }
        Ok(())
    })
}

fn write_trace(path: &Path, result: &TrainResult) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "iteration,total_cost,objective,step,full")?;
        for t in &result.trace {
            writeln!(w, "{},{:?},{:?},{:?},{}", t.iteration, t.total_cost, t.objective, t.step, u8::from(t.full))?;
        }
        Ok(())
    })
}

pub fn train_metric(s: &Settings) -> Result<()> {
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let (feat, images) = featurize(s, &diagrams)?;
    let refs: Vec<&PersistenceDiagram> = diagrams.iter().collect();
    let (params, result) = fit_metric(
        &refs,
        &images,
        &ds.labels,
        s.m,
        s.sigma,
        &s.pipeline.metric,
        substream_seed(s.seed, "fit", &[]),
    )?;
    write_weight(&s.out.join("weight.txt"), &params.weight)?;
    write_trace(&s.out.join("trace.csv"), &result)?;
    export_heatmaps(&s.out, &params.weight, &feat)?;
    println!("initial total cost {:?}", result.initial_total_cost);
    println!("final total cost {:?}", result.best_total_cost);
    println!("iterations {}", result.iterations);
    Ok(())
}

pub fn gram(s: &Settings, weight: &Path) -> Result<()> {
    let weight = read_weight(weight)?;
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let (_, images) = featurize(s, &diagrams)?;
    let params = WkpiParams::new(s.sigma, weight, s.pipeline.metric.variant)?;
    let k = gram_matrix(&images, &params)?;
    write_matrix_csv(&s.out.join("gram.csv"), &k)?;
    write_labels(&s.out.join("labels.csv"), &ds)?;
    println!("wrote {0}x{0} gram matrix to {1}", k.nrows(), s.out.display());
    Ok(())
}

/// Stratified split: each class contributes `round(fraction * size)` test
/// items, keeping at least one item on each side when it has two or more.
fn split(labels: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in 0..k {
        let mut items: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        items.shuffle(&mut substream(seed, "split", &[class as u64]));
        let n = items.len();
        let t = if n < 2 { 0 } else { ((fraction * n as f64).round() as usize).clamp(1, n - 1) };
        test.extend_from_slice(&items[..t]);
        train.extend_from_slice(&items[t..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn classify(s: &Settings) -> Result<()> {
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let (train, test) = split(&ds.labels, s.test_fraction, s.seed);
    if test.is_empty() {
        bail!("test split is empty");
    }
    let tr: Vec<&PersistenceDiagram> = train.iter().map(|&i| &diagrams[i]).collect();
    let te: Vec<&PersistenceDiagram> = test.iter().map(|&i| &diagrams[i]).collect();
    let train_labels: Vec<usize> = train.iter().map(|&i| ds.labels[i]).collect();
    let test_labels: Vec<usize> = test.iter().map(|&i| ds.labels[i]).collect();
    let feat = ImageFeaturizer::fit(&tr, &s.pipeline.diagrams.dimensions, &s.pipeline.images)?;
    let train_images = feat.transform_all(&tr);
    let (params, _) = fit_metric(
        &tr,
        &train_images,
        &train_labels,
        s.m,
        s.sigma,
        &s.pipeline.metric,
        substream_seed(s.seed, "fit", &[]),
    )?;
    let all: Vec<PersistenceImage> = train_images.into_iter().chain(feat.transform_all(&te)).collect();
    let joint = gram_matrix(&all, &params)?;
    let n = train.len();
    let gram = joint.view((0, 0), (n, n)).into_owned();
    let cross = joint.view((n, 0), (test.len(), n)).into_owned();
    let model = one_vs_rest(&gram, &train_labels, s.c, s.cv.tolerance)?;
    let predicted = model.predict_rows(&cross)?;
    write_weight(&s.out.join("weight.txt"), &params.weight)?;
    write_atomic(&s.out.join("predictions.csv"), |w| {
        writeln!(w, "graph,label,predicted")?;
        for ((&g, &l), &p) in test.iter().zip(&test_labels).zip(&predicted) {
            writeln!(w, "{g},{},{}", ds.class_values[l], ds.class_values[p])?;
        }
        Ok(())
    })?;
    println!(
        "test accuracy {:.2}% ({} train, {} test)",
        100.0 * accuracy(&predicted, &test_labels),
        n,
        test.len()
    );
    Ok(())
}

pub fn cv(s: &Settings) -> Result<()> {
    s.cv.validate()?;
    let ds = load_dataset(s)?;
    let diagrams = diagrams(s, &ds)?;
    let pipeline = WkpiCv {
        diagrams: &diagrams,
        labels: &ds.labels,
        config: &s.pipeline,
    };
    let report = nested_cv(&pipeline, &ds.labels, &s.cv)?;
    write_atomic(&s.out.join("cv_report.csv"), |w| Ok(report.write_csv(w)?))?;
    let summary = report.summary_text();
    write_text(&s.out.join("cv_summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

/// Parses `x_min,x_max,y_min,y_max`.
pub fn parse_grid(text: &str, y_resolution: usize) -> Result<GridSpec> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad grid {text:?}"))?;
    let [x0, x1, y0, y1] = v[..] else {
        bail!("grid needs four values x_min,x_max,y_min,y_max, got {text:?}");
    };
    Ok(GridSpec::from_bounds(x0, x1, y0, y1, y_resolution)?)
}

pub fn heatmap(s: &Settings, weight: &Path, grid: Option<&str>) -> Result<()> {
    let weight = read_weight(weight)?;
    match grid {
        Some(text) => {
            let grid = parse_grid(text, s.pipeline.images.y_resolution)?;
            export_heatmap(&s.out, "heatmap", &weight, &grid)?;
        }
        None => {
            let ds = load_dataset(s).context("heatmap needs --grid or a dataset to fit the grid on")?;
            let diagrams = diagrams(s, &ds)?;
            let (feat, _) = featurize(s, &diagrams)?;
            export_heatmaps(&s.out, &weight, &feat)?;
        }
    }
    println!("wrote heatmap to {}", s.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 20)).collect();
        let (train, test) = split(&labels, 0.2, 4);
        assert_eq!(test.iter().filter(|&&i| labels[i] == 0).count(), 4);
        assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 2);
        assert_eq!(train.len() + test.len(), 30);
        assert_eq!(split(&labels, 0.2, 4), (train, test));
        let (_, tiny) = split(&[0, 1, 1], 0.1, 0);
        assert_eq!(tiny.len(), 1);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0, 1, 0, 0.5", 5).unwrap();
        assert_eq!((g.x_resolution, g.y_resolution), (10, 5));
        assert!(parse_grid("0,1,0", 5).is_err());
        assert!(parse_grid("0,1,1,0", 5).is_err());
    }
}
