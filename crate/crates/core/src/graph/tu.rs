//! Reader and writer for the TU benchmark text layout:
//! `NAME_A.txt` (1-indexed edge list), `NAME_graph_indicator.txt` (graph id per
//! node), `NAME_graph_labels.txt` (one label per graph) and optionally
//! `NAME_node_labels.txt`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dataset, Graph, GraphError};

/// Cleanup performed while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

fn read_file(dir: &Path, name: &str, suffix: &str) -> Result<Option<(String, String)>, GraphError> {
    let path = dir.join(format!("{name}_{suffix}.txt"));
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(Some((path.display().to_string(), text)))
}

fn require(dir: &Path, name: &str, suffix: &str) -> Result<(String, String), GraphError> {
    read_file(dir, name, suffix)?.ok_or_else(|| {
        GraphError::MissingFile(dir.join(format!("{name}_{suffix}.txt")).display().to_string())
    })
}

/// Integer rows of a file, skipping blank lines. Commas and whitespace separate tokens.
fn int_rows(file: &str, text: &str) -> Result<Vec<(usize, Vec<i64>)>, GraphError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let toks = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i64>().map_err(|_| GraphError::Parse {
                    file: file.to_string(),
                    line: i + 1,
                    message: format!("non-integer token {t:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((i + 1, toks));
    }
    Ok(rows)
}

fn single(file: &str, rows: Vec<(usize, Vec<i64>)>) -> Result<Vec<i64>, GraphError> {
    rows.into_iter()
        .map(|(line, toks)| match toks.as_slice() {
            [x] => Ok(*x),
            _ => Err(GraphError::Parse {
                file: file.to_string(),
                line,
                message: format!("expected one value, found {}", toks.len()),
            }),
        })
        .collect()
}

/// Loads dataset `name` from `dir`, returning the dataset and cleanup statistics.
pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<(Dataset, LoadStats), GraphError> {
    let (a_file, a_text) = require(dir, name, "A")?;
    let (ind_file, ind_text) = require(dir, name, "graph_indicator")?;
    let (lab_file, lab_text) = require(dir, name, "graph_labels")?;

    let indicator = single(&ind_file, int_rows(&ind_file, &ind_text)?)?;
    let raw_labels = single(&lab_file, int_rows(&lab_file, &lab_text)?)?;
    let graph_count = raw_labels.len();
    if graph_count == 0 {
        return Err(GraphError::EmptyDataset(name.to_string()));
    }

    // node -> (graph, local index)
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; graph_count];
    for (v, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > graph_count {
            return Err(GraphError::Parse {
                file: ind_file.clone(),
                line: v + 1,
                message: format!("graph id {gid} outside 1..={graph_count}"),
            });
        }
        let g = gid as usize - 1;
        local.push((g, sizes[g]));
        sizes[g] += 1;
    }

    let mut edge_lists: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    for (line, toks) in int_rows(&a_file, &a_text)? {
        let parse_err = |message: String| GraphError::Parse {
            file: a_file.clone(),
            line,
            message,
        };
        let [i, j] = toks.as_slice() else {
            return Err(parse_err(format!("expected two node ids, found {}", toks.len())));
        };
        let lookup = |x: i64| {
            if x < 1 || x as usize > local.len() {
                Err(parse_err(format!("node {x} outside 1..={}", local.len())))
            } else {
                Ok(local[x as usize - 1])
            }
        };
        let ((gi, li), (gj, lj)) = (lookup(*i)?, lookup(*j)?);
        if gi != gj {
            return Err(parse_err(format!(
                "edge ({i}, {j}) joins graphs {} and {}",
                gi + 1,
                gj + 1
            )));
        }
        edge_lists[gi].push((li, lj));
    }

    let mut stats = LoadStats::default();
    let mut graphs = Vec::with_capacity(graph_count);
    for (g, edges) in edge_lists.into_iter().enumerate() {
        let (graph, dups, loops) = Graph::with_stats(sizes[g], edges)?;
        stats.duplicate_edges += dups;
        stats.self_loops += loops;
        graphs.push(graph);
    }
    if stats.duplicate_edges + stats.self_loops > 0 {
        log::info!(
            "{name}: dropped {} duplicate edge entries and {} self-loops",
            stats.duplicate_edges,
            stats.self_loops
        );
    }

    let mut class_values = raw_labels.clone();
    class_values.sort_unstable();
    class_values.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| class_values.binary_search(l).expect("label present"))
        .collect();

    let node_labels = match read_file(dir, name, "node_labels")? {
        Some((file, text)) => {
            let flat = single(&file, int_rows(&file, &text)?)?;
            if flat.len() != local.len() {
                return Err(GraphError::Parse {
                    file,
                    line: flat.len(),
                    message: format!("{} node labels for {} nodes", flat.len(), local.len()),
                });
            }
            let mut per_graph: Vec<Vec<i64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
            for (v, &(g, _)) in local.iter().enumerate() {
                per_graph[g].push(flat[v]);
            }
            Some(per_graph)
        }
        None => None,
    };

    Ok((
        Dataset {
            name: name.to_string(),
            graphs,
            labels,
            class_values,
            node_labels,
        },
        stats,
    ))
}

/// Writes a dataset in the TU layout; each edge is listed in both directions.
pub fn write_tu_dataset(dir: &Path, ds: &Dataset) -> Result<(), GraphError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| GraphError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut a = Vec::new();
    let mut ind = Vec::new();
    let mut lab = Vec::new();
    let mut offset = 0usize;
    for (gi, (g, &label)) in ds.graphs.iter().zip(&ds.labels).enumerate() {
        for _ in 0..g.node_count() {
            writeln!(ind, "{}", gi + 1).expect("vec write");
        }
        for &(u, v) in g.edges() {
            writeln!(a, "{}, {}", offset + u + 1, offset + v + 1).expect("vec write");
            writeln!(a, "{}, {}", offset + v + 1, offset + u + 1).expect("vec write");
        }
        writeln!(lab, "{}", ds.class_values[label]).expect("vec write");
        offset += g.node_count();
    }
    let name = &ds.name;
    for (suffix, bytes) in [("A", a), ("graph_indicator", ind), ("graph_labels", lab)] {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        fs::write(&path, bytes).map_err(io(&path))?;
    }
    if let Some(nl) = &ds.node_labels {
        let mut out = Vec::new();
        for l in nl.iter().flatten() {
            writeln!(out, "{l}").expect("vec write");
        }
        let path = dir.join(format!("{name}_node_labels.txt"));
        fs::write(&path, out).map_err(io(&path))?;
    }
    Ok(())
}
