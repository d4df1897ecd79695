//! Generated corpora and view sets shared by tests, the acceptance suite and
//! the benchmarks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::StoredRelation;
use crate::error::{Error, Result};
use crate::fourc::View;
use crate::search::QueryView;
use crate::table::{ColumnRef, Row, TableId};

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(p, e))
}

fn csv_text(header: &[&str], rows: &[Row]) -> String {
    let mut out = Vec::new();
    crate::table::write_csv(&mut out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>(), rows)
        .expect("in-memory csv");
    String::from_utf8(out).unwrap()
}

fn rows(data: &[&[&str]]) -> Vec<Row> {
    data.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect()
}

/// The five-table employee corpus. `employees.eid` draws from the same
/// integer domain as `customers.cid`, so an inclusion dependency links them
/// even though the join is meaningless.
pub fn write_employee_corpus(dir: &Path) -> Result<()> {
    write_file(
        dir,
        "employees.csv",
        &csv_text(
            &["eid", "employee", "dept"],
            &rows(&[
                &["1", "Raul CF", "Sales"],
                &["2", "Sofia M", "Marketing"],
                &["3", "Jin P", "Engineering"],
                &["4", "Ada L", "Engineering"],
                &["5", "Omar K", "Sales"],
            ]),
        ),
    )?;
    write_file(
        dir,
        "billing_address.csv",
        &csv_text(
            &["eid", "address"],
            &rows(&[
                &["1", "Pie street"],
                &["2", "Oak road"],
                &["3", "Elm lane"],
                &["4", "Birch way"],
                &["5", "Cedar court"],
            ]),
        ),
    )?;
    write_file(
        dir,
        "staff_2019.csv",
        &csv_text(
            &["eid", "address"],
            &rows(&[&["1", "Pie street"], &["2", "Oak road"], &["3", "Elm lane"]]),
        ),
    )?;
    write_file(
        dir,
        "staff_2020.csv",
        &csv_text(
            &["eid", "address"],
            &rows(&[
                &["1", "Flea Av"],
                &["2", "Oak road"],
                &["4", "Birch way"],
                &["5", "Cedar court"],
            ]),
        ),
    )?;
    write_file(
        dir,
        "customers.csv",
        &csv_text(
            &["cid", "name", "address"],
            &rows(&[
                &["1", "Acme Corp", "12 Harbor Blvd"],
                &["2", "Blue Ltd", "4 Market Sq"],
                &["3", "Crane Inc", "77 Mill Rd"],
                &["4", "Delta Co", "9 Quay St"],
                &["5", "Echo LLC", "31 Canal Walk"],
                &["6", "Fern Ltd", "2 Dock Ln"],
                &["7", "Gale Inc", "18 Pier Rd"],
                &["8", "Hart Co", "5 Wharf St"],
            ]),
        ),
    )
}

pub fn employee_query() -> QueryView {
    QueryView::new(["employee", "address"], [vec![("employee".to_string(), "Raul CF".to_string())]]).unwrap()
}

/// Table names of the narrative corpus grouped by the role their join with
/// `employees` plays.
pub struct NarrativeLayout {
    pub compatible: Vec<String>,
    pub container: String,
    pub contained: Vec<String>,
    pub contradictory: [String; 2],
}

/// One `employees` table plus fourteen address tables. Joined with
/// `employees`, eight address tables give the same view, three give views
/// contained in a fourth, the two resulting summaries are complementary, and
/// the last two contradict each other on Raul's address.
pub fn write_narrative_corpus(dir: &Path) -> Result<NarrativeLayout> {
    let names = [
        "Raul CF", "Sofia M", "Jin P", "Ada L", "Omar K", "Lena B", "Tomas R", "Ines V", "Karl D", "Mia S",
        "Noah E", "Zoe T", "Ivan H", "Yara N",
    ];
    let emp: Vec<Row> = names
        .iter()
        .enumerate()
        .map(|(i, n)| vec![(i + 1).to_string(), n.to_string()])
        .collect();
    write_file(dir, "employees.csv", &csv_text(&["eid", "employee"], &emp))?;
    let addr = |eids: &[usize], overrides: &[(usize, &str)]| -> String {
        let rows: Vec<Row> = eids
            .iter()
            .map(|&e| {
                let a = overrides
                    .iter()
                    .find(|(k, _)| *k == e)
                    .map(|(_, a)| a.to_string())
                    .unwrap_or_else(|| format!("{} Main St", e * 10));
                vec![e.to_string(), a]
            })
            .collect();
        csv_text(&["eid", "address"], &rows)
    };
    let mut layout = NarrativeLayout {
        compatible: vec![],
        container: "office_main".into(),
        contained: vec![],
        contradictory: ["payroll_home".into(), "payroll_work".into()],
    };
    for i in 0..8 {
        let name = format!("hr_copy_{i}");
        write_file(dir, &format!("{name}.csv"), &addr(&[2, 3, 4, 5], &[]))?;
        layout.compatible.push(name);
    }
    write_file(dir, "office_main.csv", &addr(&[6, 7, 8, 9, 10], &[]))?;
    for (name, eids) in [
        ("office_east", &[6, 7][..]),
        ("office_west", &[8, 9, 10][..]),
        ("office_north", &[6, 8, 10][..]),
    ] {
        write_file(dir, &format!("{name}.csv"), &addr(eids, &[]))?;
        layout.contained.push(name.into());
    }
    write_file(dir, "payroll_home.csv", &addr(&[1, 11, 12], &[(1, "Pie street")]))?;
    write_file(dir, "payroll_work.csv", &addr(&[1, 13, 14], &[(1, "Flea Av")]))?;
    Ok(layout)
}

pub fn narrative_query() -> QueryView {
    QueryView::new(["employee", "address"], Vec::<Vec<(String, String)>>::new()).unwrap()
}

/// Shape of a generated view set.
#[derive(Debug, Clone, Copy)]
pub struct ViewSetShape {
    pub max_views: usize,
    pub max_rows: usize,
    pub max_attrs: usize,
}

impl Default for ViewSetShape {
    fn default() -> Self {
        ViewSetShape {
            max_views: 20,
            max_rows: 500,
            max_attrs: 6,
        }
    }
}

/// Random views over one base relation. Each view after the first is a
/// duplicate, subset, new version (changed non-key cells), extension with
/// new keys, or projection of an earlier view, so every 4C relation shows
/// up. Column order is sometimes permuted and some views repeat rows.
pub fn random_view_set<R: Rng>(rng: &mut R, shape: ViewSetShape) -> Vec<View> {
    let n_attrs = rng.gen_range(1..=shape.max_attrs.max(1));
    let schema: Vec<String> = (0..n_attrs).map(|i| format!("a{i}")).collect();
    // Small domains give low key scores and exercise the no-key path.
    let domains: Vec<usize> = (0..n_attrs)
        .map(|i| if i == 0 { 0 } else { *[3usize, 10, 1000].choose(rng).unwrap() })
        .collect();
    let key_dup = rng.gen_bool(0.2);
    let mut next_key = 0usize;
    let mut fresh_row = |rng: &mut R| -> Row {
        let k = if key_dup && next_key > 0 && rng.gen_bool(0.3) {
            rng.gen_range(0..next_key)
        } else {
            next_key += 1;
            next_key - 1
        };
        let mut r = vec![format!("k{k}")];
        for &d in &domains[1..] {
            r.push(if rng.gen_bool(0.05) {
                String::new()
            } else {
                format!("x{}", rng.gen_range(0..d))
            });
        }
        r
    };
    let n_views = rng.gen_range(1..=shape.max_views.max(1));
    let mut views: Vec<(Vec<String>, Vec<Row>)> = Vec::new();
    for _ in 0..n_views {
        let (sch, mut rs) = if views.is_empty() || rng.gen_bool(0.15) {
            let n = rng.gen_range(1..=shape.max_rows.max(1));
            (schema.clone(), (0..n).map(|_| fresh_row(rng)).collect::<Vec<_>>())
        } else {
            let (sch, src) = views.choose(rng).unwrap().clone();
            match rng.gen_range(0..5) {
                0 => (sch, src),
                1 => {
                    let keep = rng.gen_range(0.3..1.0);
                    let rs: Vec<Row> = src.into_iter().filter(|_| rng.gen_bool(keep)).collect();
                    (sch, rs)
                }
                2 => {
                    let mut rs = src;
                    let changes = rng.gen_range(1..=3.min(rs.len()).max(1));
                    for _ in 0..changes {
                        if rs.is_empty() || sch.len() < 2 {
                            break;
                        }
                        let i = rng.gen_range(0..rs.len());
                        let c = rng.gen_range(1..sch.len());
                        rs[i][c] = format!("y{}", rng.gen_range(0..1000));
                    }
                    (sch, rs)
                }
                3 => {
                    let mut rs = src;
                    rs.retain(|_| rng.gen_bool(0.8));
                    let extra = rng.gen_range(1..=10);
                    for _ in 0..extra {
                        let full = fresh_row(rng);
                        rs.push(project_row(&schema, &full, &sch));
                    }
                    rs.truncate(shape.max_rows.max(1));
                    (sch, rs)
                }
                _ => {
                    if sch.len() < 2 {
                        (sch, src)
                    } else {
                        let drop = rng.gen_range(0..sch.len());
                        let keep: Vec<usize> = (0..sch.len()).filter(|&i| i != drop).collect();
                        let s2 = keep.iter().map(|&i| sch[i].clone()).collect();
                        let r2 = src.iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect();
                        (s2, r2)
                    }
                }
            }
        };
        if rs.is_empty() {
            rs.push(project_row(&schema, &fresh_row(rng), &sch));
        }
        if rng.gen_bool(0.1) {
            let r = rs.choose(rng).unwrap().clone();
            rs.push(r);
        }
        rs.shuffle(rng);
        views.push((sch, rs));
    }
    views
        .into_iter()
        .enumerate()
        .map(|(i, (sch, rs))| {
            if sch.len() > 1 && rng.gen_bool(0.2) {
                let mut perm: Vec<usize> = (0..sch.len()).collect();
                perm.shuffle(rng);
                let s2 = perm.iter().map(|&p| sch[p].clone()).collect();
                let r2 = rs.iter().map(|r| perm.iter().map(|&p| r[p].clone()).collect()).collect();
                View::new(format!("v{i:02}"), s2, r2)
            } else {
                View::new(format!("v{i:02}"), sch, rs)
            }
        })
        .collect()
}

fn project_row(full_schema: &[String], row: &Row, target: &[String]) -> Row {
    target
        .iter()
        .map(|a| row[full_schema.iter().position(|s| s == a).unwrap()].clone())
        .collect()
}

/// `views` relations `(key, value, note)` of `rows` rows each. The first
/// `contradicted` keys carry a different value in every view, so every pair
/// of views contradicts on the same key values. A quarter of the remaining
/// rows use keys private to their view; the rest are shared verbatim.
pub fn chasing_views(views: usize, rows: usize, contradicted: usize) -> Vec<View> {
    let schema = vec!["key".to_string(), "value".to_string(), "note".to_string()];
    (0..views)
        .map(|v| {
            let rs = (0..rows)
                .map(|r| {
                    if r < contradicted {
                        vec![format!("key{r}"), format!("v{v}-{r}"), format!("n{}", r % 7)]
                    } else if r % 4 == 0 {
                        vec![format!("view{v}-key{r}"), format!("own-{r}"), format!("n{}", r % 7)]
                    } else {
                        vec![format!("key{r}"), format!("base-{r}"), format!("n{}", r % 7)]
                    }
                })
                .collect();
            View::new(format!("view{v:03}"), schema.clone(), rs)
        })
        .collect()
}

/// A corpus of `tables` CSVs: people tables with `pid, name`, city tables
/// with `pid, city`, and filler tables with unrelated columns. City tables
/// disagree with each other on some people, and filler tables use their own
/// value domains so they never join with anything.
pub fn write_synthetic_corpus(dir: &Path, tables: usize, rows: usize, seed: u64) -> Result<QueryView> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let people = 3.min(tables);
    let cities = 4.min(tables - people);
    for t in 0..people {
        let start = t * rows / 10;
        let rs: Vec<Row> = (start..start + rows)
            .map(|p| vec![p.to_string(), format!("person {p}")])
            .collect();
        write_file(dir, &format!("people_{t:02}.csv"), &csv_text(&["pid", "name"], &rs))?;
    }
    let towns = ["Lyon", "Porto", "Graz", "Turku", "Gent", "Bergen", "Brno", "Split"];
    for t in 0..cities {
        let mut pids: Vec<usize> = (0..rows).collect();
        pids.shuffle(&mut rng);
        pids.truncate(rows / 2);
        pids.sort_unstable();
        let rs: Vec<Row> = pids
            .iter()
            .map(|&p| {
                let town = if rng.gen_bool(0.05) {
                    towns[(p + t + 1) % towns.len()]
                } else {
                    towns[p % towns.len()]
                };
                vec![p.to_string(), town.to_string()]
            })
            .collect();
        write_file(dir, &format!("cities_{t:02}.csv"), &csv_text(&["pid", "city"], &rs))?;
    }
    for t in people + cities..tables {
        let mut text = String::from("code,amount,label\n");
        for i in 0..rows * 4 {
            writeln!(
                text,
                "f{t}-{i},{:.2},l{t}-{}",
                rng.gen_range(0.0..1e6),
                rng.gen_range(0..50)
            )
            .unwrap();
        }
        write_file(dir, &format!("filler_{t:02}.csv"), &text)?;
    }
    Ok(QueryView::new(["name", "city"], [vec![("name".to_string(), format!("person {}", rows / 2))]]).unwrap())
}

/// A pair of relations keyed by integers where each left key matches about
/// `fanout` right rows.
pub fn join_inputs<R: Rng>(rng: &mut R, left_rows: usize, keys: usize, fanout: usize) -> (StoredRelation, StoredRelation) {
    let l: Vec<Row> = (0..left_rows)
        .map(|i| vec![rng.gen_range(0..keys).to_string(), format!("l{i}")])
        .collect();
    let r: Vec<Row> = (0..keys * fanout)
        .map(|i| vec![(i % keys).to_string(), format!("r{}", rng.gen_range(0..1_000_000))])
        .collect();
    (
        StoredRelation::new(
            vec![ColumnRef::new(TableId(0), "k"), ColumnRef::new(TableId(0), "a")],
            l,
        ),
        StoredRelation::new(
            vec![ColumnRef::new(TableId(1), "k"), ColumnRef::new(TableId(1), "b")],
            r,
        ),
    )
}
