"""An XML-native data warehouse engine with an OLAP cube algebra,
rule-driven hierarchy evolution, and three cube mining capabilities."""

from .association import (
    AssociationRule,
    MetaRule,
    derive_rules,
    export_rules,
    mine_frequent,
)
from .clustering import (
    Dendrogram,
    MemberVector,
    Partition,
    ahc_cluster,
    cut_partition,
    extract_member_vectors,
    partition_quality,
    partition_to_rules,
)
from .cube import (
    Axis,
    CellValue,
    Cube,
    build_cube,
    cube_from_json,
    cube_to_json,
    cube_to_table,
    dice,
    drill_down,
    pull,
    push,
    roll_up,
    rotate,
    slice_cube,
    switch,
)
from .errors import EngineError
from .evolution import (
    DataRule,
    RuleSet,
    StructureRule,
    apply_ruleset,
    format_rules,
    parse_rules,
    rules_from_json,
    rules_to_json,
    validate_ruleset,
)
from .factorial import (
    FactorialResult,
    HomogeneityScore,
    IndicatorMatrix,
    TestValueTable,
    arrange_cube,
    build_indicator_matrix,
    homogeneity,
    mca_axes,
    test_values,
)
from .ingestion import fixture_warehouse, generate_fixture, ingest, mapping_from_json
from .model import (
    DimensionData,
    DimensionSpec,
    FactRow,
    FactSpec,
    FactTable,
    Instance,
    LevelInstances,
    LevelSpec,
    ValidationReport,
    Warehouse,
    WarehouseModel,
    validate_warehouse,
)
from .xmlio import (
    load_warehouse,
    parse_dimension,
    parse_facts,
    parse_model,
    parse_warehouse,
    serialize_warehouse,
    write_warehouse,
)

__version__ = "0.1.0"
