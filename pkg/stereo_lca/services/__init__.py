from .gen_service import GenService
from .train_service import TrainService
from .encode_service import EncodeService
from .tune_service import TuneService
from .infer_service import InferService
from .scale_infer_service import ScaleInferService
from .analyze_service import AnalyzeService
from .predict_service import PredictService
from .sweep_service import SweepService

SERVICES = {
    service.command: service
    for service in (GenService, TrainService, EncodeService, TuneService, InferService,
                    ScaleInferService, AnalyzeService, PredictService, SweepService)
}
