"""
PipelineBuilder - LangGraph construction and execution of the unfolding commands.

This module builds a LangGraph state graph for one command (a chain of stages
declared in pipeline.json) and runs it on a parsed problem.
"""

import json
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog
from dotenv import load_dotenv
from langgraph.graph import END, StateGraph
from typing_extensions import TypedDict

from rfde_unfold.problem_io import Problem
from rfde_unfold.settings import UnfoldSettings
from stages import AnalysisStage, SynthesisStage, ValidationStage, VersalityStage

DEFAULT_PIPELINE = Path(__file__).with_name("pipeline.json")

STAGE_CLASSES = {
    "AnalysisStage": AnalysisStage,
    "VersalityStage": VersalityStage,
    "SynthesisStage": SynthesisStage,
    "ValidationStage": ValidationStage,
}


class PipelineState(TypedDict):
    """State schema for one pipeline run."""
    run_id: str
    command: str
    problem: Any
    options: Dict[str, Any]
    start_time: str
    current_step: Optional[str]
    execution_log: List[Dict[str, Any]]
    errors: List[Dict[str, Any]]
    results: Dict[str, Any]
    end_time: Optional[str]
    duration: Optional[float]


class PipelineBuilder:
    """
    Builder class for creating and executing unfolding pipelines from JSON configuration.

    This class handles:
    - Loading and validating the pipeline JSON
    - Stage instantiation per step
    - Graph construction for a command's chain of steps
    - Execution with state management and early stop on failure
    """

    def __init__(
        self,
        pipeline_file: Optional[str] = None,
        env_file: str = ".env",
        settings: Optional[UnfoldSettings] = None,
    ):
        """
        Initialize the PipelineBuilder.

        Args:
            pipeline_file: Path to the pipeline JSON file
            env_file: Path to the environment variables file
            settings: Base settings handed to every stage
        """
        self.pipeline_file = str(pipeline_file or DEFAULT_PIPELINE)
        self.env_file = env_file
        self.logger = structlog.get_logger()

        self._load_environment()
        self.settings = settings or UnfoldSettings()
        self.pipeline_config = self._load_pipeline()
        self.steps = {step["id"]: step for step in self.pipeline_config.get("steps", [])}
        self.stages: Dict[str, Any] = {}
        self.graphs: Dict[str, Any] = {}

    def _load_environment(self) -> None:
        """Load RFDE_ variables from the .env file, if there is one."""
        if os.path.exists(self.env_file):
            load_dotenv(self.env_file)
            self.logger.info("Environment variables loaded", env_file=self.env_file)
        else:
            self.logger.debug("Environment file not found", env_file=self.env_file)

    def _load_pipeline(self) -> Dict[str, Any]:
        try:
            with open(self.pipeline_file, "r", encoding="utf-8") as f:
                config = json.load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Pipeline file not found: {self.pipeline_file}")
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in pipeline file: {e}")

        for step in config.get("steps", []):
            if not step.get("id") or not step.get("stage"):
                raise ValueError("Step must have 'id' and 'stage' fields")
            if step["stage"] not in STAGE_CLASSES:
                raise ValueError(f"Unknown stage type: {step['stage']}")

        self.logger.info(
            "Pipeline loaded successfully",
            pipeline_name=config.get("pipeline_name"),
            steps_count=len(config.get("steps", [])),
        )
        return config

    def command_chain(self, command: str) -> List[str]:
        """
        Steps run by a command, checked against the next_steps of each step.

        Raises:
            ValueError: for unknown commands or chains that skip a declared edge
        """
        commands = self.pipeline_config.get("commands", {})
        if command not in commands:
            raise ValueError(f"Unknown command: {command}")
        chain = list(commands[command])
        for step_id in chain:
            if step_id not in self.steps:
                raise ValueError(f"Command '{command}' refers to unknown step '{step_id}'")
        for current, following in zip(chain, chain[1:]):
            if following not in self.steps[current].get("next_steps", []):
                raise ValueError(f"Step '{following}' does not follow '{current}' in {self.pipeline_file}")
        return chain

    def _create_stage(self, step_id: str):
        if step_id not in self.stages:
            step = self.steps[step_id]
            stage_class = STAGE_CLASSES[step["stage"]]
            self.stages[step_id] = stage_class(
                stage_id=step_id,
                description=step.get("description", ""),
                settings=self.settings,
                logger=self.logger,
            )
        return self.stages[step_id]

    def build_graph(self, command: str):
        """
        Build and compile the LangGraph for one command.

        Returns:
            Compiled graph ready for invoke()
        """
        if command in self.graphs:
            return self.graphs[command]

        chain = self.command_chain(command)
        self.logger.info("Building pipeline graph", command=command, steps=chain)

        graph = StateGraph(PipelineState)
        for step_id in chain:
            graph.add_node(step_id, self._create_node_function(self._create_stage(step_id), step_id))

        for current, following in zip(chain, chain[1:]):
            graph.add_conditional_edges(current, self._route, {"continue": following, "stop": END})
        graph.add_edge(chain[-1], END)
        graph.set_entry_point(chain[0])

        compiled = graph.compile()
        self.graphs[command] = compiled
        self.logger.info("Pipeline graph built", command=command, nodes_count=len(chain))
        return compiled

    @staticmethod
    def _route(state: PipelineState) -> str:
        return "stop" if state["errors"] else "continue"

    def _create_node_function(self, stage, step_id: str):
        def node_function(state: PipelineState) -> PipelineState:
            """Execute a single stage of the pipeline."""
            self.logger.info("Executing node", step_id=step_id)
            result = stage.execute(self._prepare_node_input(state, step_id))

            new_state = state.copy()
            new_state["current_step"] = step_id
            new_state["execution_log"] = state["execution_log"] + [{
                "step_id": step_id,
                "timestamp": datetime.now().isoformat(),
                "success": result.success,
                "execution_time": result.execution_time,
            }]

            if result.success:
                new_state["results"] = {**state["results"], step_id: result.data}
                self.logger.info("Node executed successfully", step_id=step_id)
            else:
                new_state["errors"] = state["errors"] + [{
                    "step_id": step_id,
                    "error": result.error,
                    "error_type": result.error_type,
                    "timestamp": datetime.now().isoformat(),
                }]
                self.logger.error("Node execution failed", step_id=step_id, error=result.error)

            return new_state

        return node_function

    def _resolve(self, reference: str, state: PipelineState) -> Any:
        """Value of a {{...}} reference: problem, options.key or step.key."""
        if reference == "problem":
            return state["problem"]
        if reference.startswith("options."):
            return state["options"].get(reference.split(".", 1)[1])
        if "." in reference:
            step_ref, output_key = reference.split(".", 1)
            return state["results"].get(step_ref, {}).get(output_key)
        return state["results"].get(reference)

    def _prepare_node_input(self, state: PipelineState, step_id: str) -> Dict[str, Any]:
        """
        Prepare input data for a node based on its configuration.

        Args:
            state: Current pipeline state
            step_id: Step identifier

        Returns:
            Prepared input data
        """
        prepared_inputs = {}
        for input_key, input_value in self.steps[step_id].get("inputs", {}).items():
            if isinstance(input_value, str) and input_value.startswith("{{") and input_value.endswith("}}"):
                prepared_inputs[input_key] = self._resolve(input_value[2:-2].strip(), state)
            else:
                prepared_inputs[input_key] = input_value
        return prepared_inputs

    def _create_initial_state(self, command: str, problem: Problem, options: Dict[str, Any]) -> PipelineState:
        return {
            "run_id": f"{command}_{datetime.now().strftime('%Y%m%d_%H%M%S')}",
            "command": command,
            "problem": problem,
            "options": options,
            "start_time": datetime.now().isoformat(),
            "current_step": None,
            "execution_log": [],
            "errors": [],
            "results": {},
            "end_time": None,
            "duration": None,
        }

    def execute(self, command: str, problem: Problem, options: Optional[Dict[str, Any]] = None) -> PipelineState:
        """
        Run a command on a parsed problem.

        Args:
            command: analyze, check, synthesize or validate
            problem: Parsed problem file
            options: Run options; "settings" defaults to the problem's tolerances over the builder settings

        Returns:
            Final pipeline state
        """
        options = dict(options or {})
        if options.get("settings") is None:
            options["settings"] = self.settings.merged(problem.tolerances)

        graph = self.build_graph(command)
        initial_state = self._create_initial_state(command, problem, options)
        self.logger.info("Starting pipeline execution", run_id=initial_state["run_id"], command=command)

        final_state = graph.invoke(initial_state)
        final_state["end_time"] = datetime.now().isoformat()
        final_state["duration"] = (
            datetime.fromisoformat(final_state["end_time"]) - datetime.fromisoformat(final_state["start_time"])
        ).total_seconds()

        self.logger.info(
            "Pipeline execution completed",
            run_id=final_state["run_id"],
            duration=final_state["duration"],
            errors_count=len(final_state["errors"]),
        )
        return final_state

    def get_pipeline_summary(self) -> Dict[str, Any]:
        """
        Get a summary of the pipeline configuration.

        Returns:
            Pipeline summary
        """
        return {
            "pipeline_name": self.pipeline_config.get("pipeline_name"),
            "description": self.pipeline_config.get("description"),
            "version": self.pipeline_config.get("version"),
            "commands": self.pipeline_config.get("commands", {}),
            "steps": [
                {"id": step["id"], "stage": step["stage"], "next_steps": step.get("next_steps", [])}
                for step in self.pipeline_config.get("steps", [])
            ],
        }
