db.inventory.aggregate([
    { $project: {
        "sku": 1,
        "available": { $gt: ["$instock", 0] }
    } }
])
