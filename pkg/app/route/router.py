import typer

from app.route.approx import router as approx_router
from app.route.attack import router as attack_router
from app.route.exceptional import router as exceptional_router
from app.route.instance import router as instance_router
from app.route.nfij import router as nfij_router
from app.route.predict import router as predict_router

api_router = typer.Typer()

api_router.add_typer(instance_router)
api_router.add_typer(attack_router)
api_router.add_typer(approx_router)
api_router.add_typer(predict_router)
api_router.add_typer(exceptional_router)
api_router.add_typer(nfij_router)
