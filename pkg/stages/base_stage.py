"""
Base stage class that all pipeline stages inherit from.

Provides common functionality for stage execution, timing, logging, and
turning library errors into failed outputs.
"""

import traceback
from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

import structlog
from pydantic import BaseModel, Field

from rfde_unfold.settings import UnfoldSettings


class StageInput(BaseModel):
    """Standardized input model for stages."""
    data: Dict[str, Any] = Field(..., description="Input data for the stage")
    context: Optional[Dict[str, Any]] = Field(None, description="Additional context")
    metadata: Optional[Dict[str, Any]] = Field(None, description="Execution metadata")


class StageOutput(BaseModel):
    """Standardized output model for stages."""
    success: bool = Field(..., description="Whether the stage execution was successful")
    data: Dict[str, Any] = Field(..., description="Output data from the stage")
    error: Optional[str] = Field(None, description="Error message if execution failed")
    error_type: Optional[str] = Field(None, description="Exception class name if execution failed")
    metadata: Optional[Dict[str, Any]] = Field(None, description="Execution metadata")
    execution_time: Optional[float] = Field(None, description="Execution time in seconds")


class BaseStage(ABC):
    """
    Abstract base class for all pipeline stages.

    Provides common functionality for:
    - Input normalization
    - Error handling and logging
    - Output key validation
    - Execution timing
    """

    required_inputs: List[str] = []
    output_keys: List[str] = []

    def __init__(
        self,
        stage_id: str,
        description: str = "",
        settings: Optional[UnfoldSettings] = None,
        logger: Optional[structlog.BoundLogger] = None,
    ):
        """
        Initialize the base stage.

        Args:
            stage_id: Unique identifier for this stage in the pipeline
            description: What the stage does (shown in pipeline summaries)
            settings: Default tolerances when the input carries none
            logger: Structured logger instance
        """
        self.stage_id = stage_id
        self.description = description
        self.settings = settings or UnfoldSettings()
        self.logger = logger or structlog.get_logger()

    def execute(self, input_data: Union[Dict[str, Any], StageInput]) -> StageOutput:
        """
        Execute the stage with the given input data.

        Args:
            input_data: Input data for the stage

        Returns:
            StageOutput with execution results
        """
        start_time = datetime.now()

        try:
            stage_input = StageInput(data=input_data) if isinstance(input_data, dict) else input_data

            self.logger.info(
                "Stage execution started",
                stage_id=self.stage_id,
                input_keys=sorted(stage_input.data.keys()),
            )

            missing = [key for key in self.required_inputs if stage_input.data.get(key) is None]
            if missing:
                raise ValueError(f"missing stage inputs: {', '.join(missing)}")

            result_data = self._execute_stage(stage_input)
            self._validate_output(result_data)

            execution_time = (datetime.now() - start_time).total_seconds()
            self.logger.info("Stage execution completed successfully", stage_id=self.stage_id, execution_time=execution_time)

            return StageOutput(
                success=True,
                data=result_data,
                metadata={"stage_id": self.stage_id, "timestamp": datetime.now().isoformat()},
                execution_time=execution_time,
            )

        except Exception as e:
            execution_time = (datetime.now() - start_time).total_seconds()

            self.logger.error(
                "Stage execution failed",
                stage_id=self.stage_id,
                error=str(e),
                error_type=type(e).__name__,
                traceback=traceback.format_exc(),
                execution_time=execution_time,
            )

            return StageOutput(
                success=False,
                data={},
                error=str(e),
                error_type=type(e).__name__,
                metadata={"stage_id": self.stage_id, "timestamp": datetime.now().isoformat()},
                execution_time=execution_time,
            )

    @abstractmethod
    def _execute_stage(self, input_data: StageInput) -> Dict[str, Any]:
        """
        Execute the stage's main logic.

        Args:
            input_data: Validated input data

        Returns:
            Dictionary containing the stage's output data
        """

    def _validate_output(self, output_data: Dict[str, Any]) -> None:
        if not isinstance(output_data, dict):
            raise ValueError("Output data must be a dictionary")
        for key in self.output_keys:
            if key not in output_data:
                raise ValueError(f"Missing required output field: {key}")

    def settings_for(self, input_data: StageInput) -> UnfoldSettings:
        """Stage settings with the run's settings object taking precedence."""
        settings = input_data.data.get("settings")
        return settings if isinstance(settings, UnfoldSettings) else self.settings

    def log_step(self, step: str, message: str, **data: Any) -> None:
        """Log an intermediate step of the stage."""
        self.logger.info("Stage step", stage_id=self.stage_id, step=step, message=message, **data)
