use cvrnn::pipeline::sweep::SweepGrid;
use cvrnn::pipeline::PipelineConfig;

const DEFAULT_CFG: &str = include_str!("../../../configs/default.cfg");
const GRID: &str = include_str!("../../../configs/sweep_grid.txt");

#[test]
fn shipped_config_is_the_builtin_default() {
    let cfg = PipelineConfig::parse(DEFAULT_CFG, "configs/default.cfg").unwrap();
    assert_eq!(cfg, PipelineConfig::default());
    assert_eq!(cfg.to_text(), DEFAULT_CFG);
}

#[test]
fn shipped_grid_contains_the_default() {
    let grid = SweepGrid::parse(GRID, "configs/sweep_grid.txt").unwrap();
    assert_eq!(grid.len(), 36);
    let base = PipelineConfig::default();
    assert!((0..grid.len()).any(|i| grid.point(&base, i).unwrap() == base));
}
