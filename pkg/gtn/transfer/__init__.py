from gtn.transfer.module import (
    GateVariant,
    TransferModule,
    export_gates_csv,
    hidden_width,
    param_count,
)

__all__ = ["GateVariant", "TransferModule", "export_gates_csv", "hidden_width", "param_count"]
