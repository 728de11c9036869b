from .assembly import Forms, assemble, gradients
from .constraints import ConstraintSet, Reduction, ReducedForm, reduce
from .mesh import (StepPolygon, TetMesh, TriMesh, export_mesh, mesh_graph_cell, mesh_plate,
                   mesh_rectangle, mesh_stepped_polygon)

__all__ = [
    "Forms", "assemble", "gradients", "ConstraintSet", "Reduction", "ReducedForm", "reduce",
    "StepPolygon", "TetMesh", "TriMesh", "export_mesh", "mesh_graph_cell", "mesh_plate",
    "mesh_rectangle", "mesh_stepped_polygon",
]
