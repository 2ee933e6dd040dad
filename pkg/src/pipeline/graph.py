"""LangGraph Workflow Graph Definition for the fit pipeline"""
from langgraph.graph import StateGraph, END

from datamodel import Dataset
from pipeline.state import FitState
from pipeline.nodes import (
    load_node,
    detect_node,
    impute_node,
    standardize_node,
    fit_node,
    export_node,
)
from utils.config_loader import RunConfig

STAGES = [
    ("load", load_node),
    ("detect", detect_node),
    ("impute", impute_node),
    ("standardize", standardize_node),
    ("fit", fit_node),
    ("export", export_node),
]


def check_error(state: FitState) -> str:
    """Route to END once a node has recorded an error"""
    if state.get("error"):
        return "error"
    return "continue"


def create_workflow():
    """
    Create and configure the fit workflow

    load -> detect -> impute -> standardize -> fit -> export, with every
    stage short-circuiting to END on error.

    Returns:
        Compiled StateGraph workflow
    """
    workflow = StateGraph(FitState)

    for name, node in STAGES:
        workflow.add_node(name, node)

    workflow.set_entry_point(STAGES[0][0])

    for (name, _), (next_name, _) in zip(STAGES, STAGES[1:]):
        workflow.add_conditional_edges(
            name,
            check_error,
            {
                "error": END,
                "continue": next_name,
            }
        )

    workflow.add_edge(STAGES[-1][0], END)

    return workflow.compile()


def run_workflow(initial_state: FitState) -> FitState:
    """
    Run the workflow with an initial state

    Args:
        initial_state: Initial pipeline state

    Returns:
        Final pipeline state after workflow completion
    """
    workflow = create_workflow()
    return workflow.invoke(initial_state)


def fit_dataset(d: Dataset, config: RunConfig, n_jobs: int = 1) -> FitState:
    """
    Run the pipeline in memory on an already loaded dataset

    Raises the failing stage's exception instead of returning an error state.
    """
    state = run_workflow({
        "raw": d,
        "config": config,
        "n_jobs": n_jobs,
        "quiet": True,
        "output_dir": None,
        "error": None,
        "failure": None,
    })
    if state.get("failure") is not None:
        raise state["failure"]
    return state
